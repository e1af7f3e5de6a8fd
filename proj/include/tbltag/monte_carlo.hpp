#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tbltag/corpus.hpp"
#include "tbltag/cue_patterns.hpp"
#include "tbltag/errors.hpp"
#include "tbltag/features.hpp"
#include "tbltag/model.hpp"
#include "tbltag/rng.hpp"
#include "tbltag/tbl.hpp"

namespace tbltag {

struct McConfig {
  int R = 6;               // samples per incorrect instance per pass
  std::uint64_t seed = 0;
  long long threshold = 2;

  void validate() const {
    if (R < 1) throw DataError("Monte Carlo R must be >= 1");
    if (threshold < 1) throw DataError("threshold must be >= 1");
  }
};

// Draws R independent samples at one position: a uniform template, then a
// uniform instantiation of that template that fires here with the gold tag
// as target. Duplicates are permitted; a drawn template with no firing
// instantiation yields nothing, so the result holds at most R rules.
inline std::vector<Rule> sample_rules(const Corpus& corpus,
                                      std::size_t dialogue_index, int position,
                                      const std::vector<Template>& templates,
                                      int R, SplitMix64& rng,
                                      const CuePatternSet& cues) {
  if (templates.empty()) throw DataError("no templates given");
  if (R < 1) throw DataError("Monte Carlo R must be >= 1");
  const Dialogue& d = corpus.dialogues.at(dialogue_index);
  const Utterance& u = d.utterances.at(std::size_t(position));
  if (!u.tagged()) throw DataError("sample_rules: position has no gold tag");
  if (u.working_tag == u.gold_tag)
    throw DataError("sample_rules: working tag already correct");

  std::vector<Rule> out;
  for (int r = 0; r < R; ++r) {
    const Template& tmpl =
        templates[std::size_t(rng.below(templates.size()))];
    Rule rule;
    rule.new_tag = u.gold_tag;
    bool ok = true;
    for (const auto& cond : tmpl.conditions) {
      auto options = detail::instance_options(cond, d, position, cues);
      if (options.empty()) {
        ok = false;
        break;
      }
      rule.antecedent.push_back(
          options[std::size_t(rng.below(options.size()))]);
    }
    if (!ok) continue;
    rule.canonicalize();
    out.push_back(std::move(rule));
  }
  return out;
}

// Monte Carlo Transformation-Based Learning: the greedy loop of the standard
// trainer with per-position random sampling instead of exhaustive
// generation, so the per-pass cost is R times the incorrect count no matter
// how many templates exist. Deterministic for a fixed seed.
inline RuleSequence train_monte_carlo(const Corpus& train,
                                      const std::vector<Template>& templates,
                                      const McConfig& config,
                                      const CuePatternSet& cues,
                                      const TrainOptions& options = {}) {
  config.validate();
  detail::Engine engine(train, templates, cues);
  return engine.train(detail::Engine::Mode::MonteCarlo, config.threshold,
                      config.R, config.seed, options);
}

// --- rule-space complexity -------------------------------------------------

struct RuleSpaceSize {
  double conditions = 0;      // (2d+1) f
  double templates = 0;       // 2^((2d+1)f); +inf when it overflows a double
  double rules_estimate = 0;  // i p (v+1)^((2d+1)f); +inf on overflow
  double log2_templates = 0;
  double log10_rules = 0;
  bool overflowed = false;
};

// Closed forms for exhaustive rule generation over f features in a window
// of size 2d+1 with v average instantiations per feature, i instances and p
// passes. Overflow is reported as an infinity flag with the log10 magnitude
// still exact.
inline RuleSpaceSize rule_space_size(int f, int d, double v, long long i,
                                     long long p) {
  if (f < 1 || d < 0 || v < 0 || i < 1 || p < 1)
    throw DataError("rule_space_size: arguments out of range");
  RuleSpaceSize out;
  out.conditions = double(2 * d + 1) * double(f);
  out.log2_templates = out.conditions;
  out.log10_rules = std::log10(double(i)) + std::log10(double(p)) +
                    out.conditions * std::log10(v + 1.0);
  out.templates = std::exp2(out.log2_templates);
  out.rules_estimate = std::pow(10.0, out.log10_rules);
  if (std::isinf(out.templates) || std::isinf(out.rules_estimate))
    out.overflowed = true;
  return out;
}

// --- bench -------------------------------------------------------------------

struct BenchRow {
  int n = 0;                        // condition-prefix length
  std::string mode;                 // "standard" or "mc"
  std::uint64_t rules_generated = 0;
  int passes = 0;
  double seconds = 0.0;
  bool aborted = false;             // standard run hit the rule budget
  std::size_t model_rules = 0;
  double train_accuracy = 0.0;
};

// The condition-sweep experiment: for each n, the first n conditions are
// combined in all possible ways into 2^n templates, then a model is trained
// and the generation counters recorded. Standard-mode runs abort cleanly at
// the generated-rule budget.
inline std::vector<BenchRow> bench_generation(
    const Corpus& train, const std::vector<Condition>& conditions, int max_n,
    bool run_standard, bool run_mc, const McConfig& mc,
    const CuePatternSet& cues, std::uint64_t budget,
    std::vector<TrainStats>* all_stats = nullptr) {
  if (max_n < 0 || max_n > static_cast<int>(conditions.size()))
    throw DataError("bench: prefix length out of range");
  std::vector<BenchRow> rows;
  const std::uint64_t total = train.utterance_count();
  for (int n = 0; n <= max_n; ++n) {
    std::vector<Condition> prefix(conditions.begin(),
                                  conditions.begin() + n);
    auto templates = enumerate_templates(prefix);
    for (int m = 0; m < 2; ++m) {
      if (m == 0 && !run_standard) continue;
      if (m == 1 && !run_mc) continue;
      BenchRow row;
      row.n = n;
      row.mode = m == 0 ? "standard" : "mc";
      TrainStats stats;
      TrainOptions opts;
      opts.stats = &stats;
      opts.budget = m == 0 ? budget : 0;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        RuleSequence model =
            m == 0 ? train_standard(train, templates, mc.threshold, cues, opts)
                   : train_monte_carlo(train, templates, mc, cues, opts);
        row.rules_generated = stats.rules_generated;
        row.passes = stats.pass_count();
        row.model_rules = model.rules.size();
        Corpus tagged = apply_sequence(model, train);
        std::uint64_t correct = 0;
        for (std::size_t di = 0; di < tagged.dialogues.size(); ++di) {
          const auto& td = tagged.dialogues[di].utterances;
          const auto& gd = train.dialogues[di].utterances;
          for (std::size_t ui = 0; ui < td.size(); ++ui)
            if (td[ui].working_tag == gd[ui].gold_tag) ++correct;
        }
        row.train_accuracy = total ? double(correct) / double(total) : 0.0;
      } catch (const BudgetExceeded& e) {
        row.aborted = true;
        row.rules_generated = e.generated();
        row.passes = stats.pass_count() + 1;  // the pass that hit the budget
      }
      const auto t1 = std::chrono::steady_clock::now();
      row.seconds = std::chrono::duration<double>(t1 - t0).count();
      rows.push_back(row);
      if (all_stats) all_stats->push_back(stats);
    }
  }
  return rows;
}

inline void write_bench_tsv(const std::vector<BenchRow>& rows,
                            std::ostream& out, std::uint64_t cfg_hash) {
  out << "# tbltag bench v1 config " << hash_hex(cfg_hash) << "\n";
  out << "n\tmode\trules_generated\tpasses\tseconds\taborted\tmodel_rules\t"
         "train_accuracy\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
    out << r.n << '\t' << r.mode << '\t' << r.rules_generated << '\t'
        << r.passes << '\t' << buf << '\t' << (r.aborted ? 1 : 0) << '\t'
        << r.model_rules << '\t';
    std::snprintf(buf, sizeof buf, "%.4f", r.train_accuracy);
    out << buf << '\n';
  }
}

}  // namespace tbltag
