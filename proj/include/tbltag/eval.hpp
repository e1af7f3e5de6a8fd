#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tbltag/committee.hpp"
#include "tbltag/corpus.hpp"
#include "tbltag/cue_patterns.hpp"
#include "tbltag/errors.hpp"
#include "tbltag/model.hpp"
#include "tbltag/monte_carlo.hpp"
#include "tbltag/tbl.hpp"

namespace tbltag {

// --- accuracy ---------------------------------------------------------------

struct AccuracyReport {
  double accuracy = 0.0;
  long long correct = 0;
  long long total = 0;
  // (gold, predicted) -> count
  std::map<std::pair<std::string, std::string>, long long> confusion;
};

// Exact fraction of predicted working tags matching the gold tags of an
// aligned corpus.
inline AccuracyReport accuracy(const Corpus& predicted, const Corpus& gold) {
  if (predicted.dialogues.size() != gold.dialogues.size())
    throw DataError("misaligned corpora: dialogue counts differ");
  AccuracyReport report;
  for (std::size_t di = 0; di < gold.dialogues.size(); ++di) {
    const Dialogue& pd = predicted.dialogues[di];
    const Dialogue& gd = gold.dialogues[di];
    if (pd.id != gd.id || pd.utterances.size() != gd.utterances.size())
      throw DataError("misaligned corpora at dialogue '" + gd.id + "'");
    for (std::size_t ui = 0; ui < gd.utterances.size(); ++ui) {
      const std::string& g = gd.utterances[ui].gold_tag;
      const std::string& p = pd.utterances[ui].working_tag;
      if (g.empty())
        throw DataError("gold corpus has untagged utterance in '" + gd.id +
                        "'");
      report.total += 1;
      if (p == g) report.correct += 1;
      report.confusion[{g, p}] += 1;
    }
  }
  report.accuracy =
      report.total ? double(report.correct) / double(report.total) : 0.0;
  return report;
}

// --- confidence curves --------------------------------------------------------

struct ConfidenceCurveRow {
  int m = 0;
  double coverage = 0.0;                 // fraction with confidence >= m
  std::optional<double> precision;       // empty when nothing is covered
  long long covered = 0;
  long long covered_correct = 0;
};

// For m = C down to 1: coverage and precision of the tagged subset.
// Precision over an empty subset is reported as undefined, never 0.
inline std::vector<ConfidenceCurveRow> confidence_curve(
    const std::vector<TagWithConfidence>& tags, const Corpus& gold, int C) {
  if (C < 1) throw DataError("confidence_curve: C must be >= 1");
  std::map<std::pair<std::string, int>, std::string> gold_by_pos;
  long long total = 0;
  for (const auto& d : gold.dialogues) {
    for (const auto& u : d.utterances) {
      if (!u.tagged())
        throw DataError("gold corpus has untagged utterance in '" + d.id +
                        "'");
      gold_by_pos[{d.id, u.position}] = u.gold_tag;
      ++total;
    }
  }
  if (total != static_cast<long long>(tags.size()))
    throw DataError("confidence_curve: tag list does not cover the corpus");
  std::vector<ConfidenceCurveRow> rows;
  for (int m = C; m >= 1; --m) {
    ConfidenceCurveRow row;
    row.m = m;
    for (const auto& t : tags) {
      if (t.confidence < m) continue;
      row.covered += 1;
      auto it = gold_by_pos.find({t.dialogue_id, t.position});
      if (it == gold_by_pos.end())
        throw DataError("confidence_curve: unknown position " +
                        t.dialogue_id + ":" + std::to_string(t.position));
      if (it->second == t.tag) row.covered_correct += 1;
    }
    row.coverage = total ? double(row.covered) / double(total) : 0.0;
    if (row.covered > 0)
      row.precision = double(row.covered_correct) / double(row.covered);
    rows.push_back(row);
  }
  return rows;
}

// --- baseline -----------------------------------------------------------------

// Sanity floor: one unconditional rule rewriting to the most frequent
// training gold tag, ties broken lexicographically.
inline RuleSequence majority_baseline(const Corpus& train) {
  if (train.utterance_count() == 0)
    throw DataError("majority_baseline: empty corpus");
  std::map<std::string, long long> counts;
  for (const auto& d : train.dialogues)
    for (const auto& u : d.utterances) {
      if (!u.tagged()) throw DataError("majority_baseline: untagged corpus");
      counts[u.gold_tag] += 1;
    }
  std::string best;
  long long best_count = -1;
  for (const auto& [tag, count] : counts) {
    if (count > best_count) {  // map order makes ties lexicographic
      best = tag;
      best_count = count;
    }
  }
  RuleSequence model;
  model.threshold = 1;
  TrainedRule tr;
  tr.rule.new_tag = best;
  tr.improvement = best_count;
  model.rules.push_back(std::move(tr));
  model.passes = 1;
  return model;
}

// --- statistics ----------------------------------------------------------------

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;  // sample standard deviation (n-1)
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  out.n = xs.size();
  if (xs.empty()) return out;
  out.min = *std::min_element(xs.begin(), xs.end());
  out.max = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += x;
  out.mean = sum / double(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.std_dev = std::sqrt(ss / double(xs.size() - 1));
  }
  return out;
}

// One-sided paired t statistic for H1: mean(a - b) > 0.
inline double paired_t_statistic(const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw DataError("paired_t_statistic: need two samples of equal size >= 2");
  std::vector<double> diffs(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
  const MeanStd d = mean_std(diffs);
  if (d.std_dev == 0.0) return d.mean > 0 ? 1e9 : (d.mean < 0 ? -1e9 : 0.0);
  return d.mean / (d.std_dev / std::sqrt(double(diffs.size())));
}

// 95th percentile of Student's t for small n (one-sided alpha = 0.05).
inline double t_critical_05(std::size_t df) {
  static const double table[] = {0,     6.314, 2.920, 2.353, 2.132, 2.015,
                                 1.943, 1.895, 1.860, 1.833, 1.812, 1.796,
                                 1.782, 1.771, 1.761, 1.753, 1.746, 1.740,
                                 1.734, 1.729, 1.725};
  if (df == 0) throw DataError("t_critical_05: zero degrees of freedom");
  if (df < sizeof(table) / sizeof(table[0])) return table[df];
  return 1.645;
}

// --- experiment runner -----------------------------------------------------------

struct ExperimentSpec {
  std::string corpus_path;        // tagged .dacts; or
  std::string synth_config_path;  // generator config
  std::uint64_t synth_seed = 1;
  int test_dialogues = 0;              // last N dialogues form the test set
  std::vector<std::string> test_ids;   // or an explicit id list
  std::string conditions = "cue:0,tag:-1,length:0,speaker:0";
  std::string mode = "mc";  // "mc" or "standard"
  int R = 6;
  long long threshold = 2;
  int C = 1;  // committee size; 1 = single model
  std::vector<std::uint64_t> seeds = {1};
  std::vector<int> sizes = {100};  // training-set size sweep, percent
  int cue_max_len = 3;
  int cue_min_count = 5;
  double cue_entropy_max = 1.0;
  int cue_top_k = 0;  // 0 = keep all below entropy_max
  std::string cues_path;  // optional static cue list

  void validate() const {
    if (corpus_path.empty() == synth_config_path.empty())
      throw DataError("experiment: set exactly one of corpus= and synth=");
    if (mode != "mc" && mode != "standard")
      throw DataError("experiment: mode must be mc or standard");
    if (seeds.empty()) throw DataError("experiment: no seeds");
    if (sizes.empty()) throw DataError("experiment: no sizes");
    for (int s : sizes)
      if (s < 1 || s > 100)
        throw DataError("experiment: sizes must be in 1..100 percent");
    if (test_dialogues <= 0 && test_ids.empty())
      throw DataError("experiment: no test split given");
    if (C < 1) throw DataError("experiment: C must be >= 1");
  }

  std::string canonical() const {
    std::ostringstream os;
    os << "C=" << C << "\n";
    os << "R=" << R << "\n";
    os << "conditions=" << conditions << "\n";
    os << "corpus=" << corpus_path << "\n";
    os << "cue_entropy_max=" << cue_entropy_max << "\n";
    os << "cue_max_len=" << cue_max_len << "\n";
    os << "cue_min_count=" << cue_min_count << "\n";
    os << "cue_top_k=" << cue_top_k << "\n";
    os << "cues=" << cues_path << "\n";
    os << "mode=" << mode << "\n";
    os << "seeds=";
    for (std::size_t i = 0; i < seeds.size(); ++i)
      os << (i ? "," : "") << seeds[i];
    os << "\n";
    os << "sizes=";
    for (std::size_t i = 0; i < sizes.size(); ++i)
      os << (i ? "," : "") << sizes[i];
    os << "\n";
    os << "synth=" << synth_config_path << "\n";
    os << "synth_seed=" << synth_seed << "\n";
    os << "test_dialogues=" << test_dialogues << "\n";
    os << "test_ids=";
    for (std::size_t i = 0; i < test_ids.size(); ++i)
      os << (i ? "," : "") << test_ids[i];
    os << "\n";
    os << "threshold=" << threshold << "\n";
    return os.str();
  }

  std::uint64_t hash() const { return config_hash(canonical()); }

  static ExperimentSpec parse(std::istream& in);
  static ExperimentSpec load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open experiment spec: " + path);
    return parse(in);
  }
};

namespace detail {

inline std::vector<std::uint64_t> parse_seed_list(const std::string& s) {
  std::vector<std::uint64_t> out;
  for (const auto& part : split_on(s, ',', false)) {
    const std::string p = trim(part);
    if (p.empty()) continue;
    std::size_t dots = p.find("..");
    if (dots != std::string::npos) {
      const std::uint64_t a = std::stoull(p.substr(0, dots));
      const std::uint64_t b = std::stoull(p.substr(dots + 2));
      if (b < a) throw DataError("bad seed range '" + p + "'");
      for (std::uint64_t v = a; v <= b; ++v) out.push_back(v);
    } else {
      out.push_back(std::stoull(p));
    }
  }
  return out;
}

}  // namespace detail

inline ExperimentSpec ExperimentSpec::parse(std::istream& in) {
  ExperimentSpec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key = value", lineno);
    const std::string key = detail::trim(t.substr(0, eq));
    const std::string value = detail::trim(t.substr(eq + 1));
    try {
      if (key == "corpus") spec.corpus_path = value;
      else if (key == "synth") spec.synth_config_path = value;
      else if (key == "synth_seed") spec.synth_seed = std::stoull(value);
      else if (key == "test_dialogues") spec.test_dialogues = std::stoi(value);
      else if (key == "test_ids") {
        for (const auto& id : detail::split_on(value, ',', false))
          if (!detail::trim(id).empty())
            spec.test_ids.push_back(detail::trim(id));
      } else if (key == "conditions") spec.conditions = value;
      else if (key == "mode") spec.mode = value;
      else if (key == "R") spec.R = std::stoi(value);
      else if (key == "threshold") spec.threshold = std::stoll(value);
      else if (key == "C") spec.C = std::stoi(value);
      else if (key == "seeds") spec.seeds = detail::parse_seed_list(value);
      else if (key == "sizes") {
        spec.sizes.clear();
        for (const auto& s : detail::split_on(value, ',', false))
          if (!detail::trim(s).empty())
            spec.sizes.push_back(std::stoi(detail::trim(s)));
      } else if (key == "cue_max_len") spec.cue_max_len = std::stoi(value);
      else if (key == "cue_min_count") spec.cue_min_count = std::stoi(value);
      else if (key == "cue_entropy_max")
        spec.cue_entropy_max = std::stod(value);
      else if (key == "cue_top_k") spec.cue_top_k = std::stoi(value);
      else if (key == "cues") spec.cues_path = value;
      else throw DataError("unknown key '" + key + "'");
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  spec.validate();
  return spec;
}

struct TrialResult {
  int size = 100;
  std::uint64_t seed = 0;
  double test_accuracy = 0.0;
  double member0_accuracy = 0.0;  // equals test_accuracy when C == 1
  std::uint64_t rules_generated = 0;
  int passes = 0;
  std::size_t model_rules = 0;
  std::vector<ConfidenceCurveRow> curve;  // only when C > 1
};

struct SizeAggregate {
  int size = 100;
  MeanStd accuracy;
  MeanStd member0_accuracy;
};

struct CurveAggregate {
  int m = 0;
  MeanStd coverage;
  MeanStd precision_macro;          // over trials with defined precision
  std::optional<double> precision_micro;  // pooled over instances
};

struct ExperimentResult {
  std::uint64_t config_hash = 0;
  double baseline_accuracy = 0.0;
  std::vector<TrialResult> trials;
  std::vector<SizeAggregate> by_size;
  std::vector<CurveAggregate> curves;  // full-size trials only, C > 1
  bool partial = false;
  std::string failure;
};

// Executes the trial grid (sizes x seeds), aggregates mean +/- sample
// deviation, and preserves partial results if a trial fails. Fully
// reproducible from the spec: all randomness flows through the seed list.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  ExperimentResult result;
  result.config_hash = spec.hash();

  Corpus full = spec.corpus_path.empty()
                    ? generate_synthetic_corpus(
                          GeneratorConfig::load(spec.synth_config_path),
                          spec.synth_seed)
                    : load_corpus(spec.corpus_path);
  std::set<std::string> test_ids(spec.test_ids.begin(), spec.test_ids.end());
  if (test_ids.empty()) {
    if (spec.test_dialogues >= static_cast<int>(full.dialogues.size()))
      throw DataError("experiment: test split larger than the corpus");
    for (std::size_t i = full.dialogues.size() - std::size_t(spec.test_dialogues);
         i < full.dialogues.size(); ++i)
      test_ids.insert(full.dialogues[i].id);
  }
  auto [train_full, test] = split_corpus(full, test_ids);
  if (train_full.dialogues.empty() || test.dialogues.empty())
    throw DataError("experiment: empty train or test split");
  {
    // majority baseline over the tagged part of the training data (a trial
    // may still fail later on untagged utterances; the floor is plumbing)
    std::map<std::string, long long> counts;
    for (const auto& d : train_full.dialogues)
      for (const auto& u : d.utterances)
        if (u.tagged()) counts[u.gold_tag] += 1;
    if (counts.empty()) throw DataError("experiment: no tagged training data");
    std::string best;
    long long best_count = -1;
    for (const auto& [tag, count] : counts)
      if (count > best_count) {
        best = tag;
        best_count = count;
      }
    long long hit = 0, total = 0;
    for (const auto& d : test.dialogues)
      for (const auto& u : d.utterances) {
        ++total;
        if (u.gold_tag == best) ++hit;
      }
    result.baseline_accuracy = total ? double(hit) / double(total) : 0.0;
  }

  const auto conditions = parse_condition_list(spec.conditions);
  const auto templates = enumerate_templates(conditions);

  struct Job {
    int size;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (int size : spec.sizes)
    for (auto seed : spec.seeds) jobs.push_back({size, seed});

  auto run_trial = [&](const Job& job) -> TrialResult {
    Corpus train;
    const std::size_t keep = std::max<std::size_t>(
        1, train_full.dialogues.size() * std::size_t(job.size) / 100);
    train.dialogues.assign(train_full.dialogues.begin(),
                           train_full.dialogues.begin() +
                               std::ptrdiff_t(keep));
    for (const auto& d : train.dialogues)
      for (const auto& u : d.utterances) train.tagset.insert(u.gold_tag);

    CuePatternSet cues;
    if (!spec.cues_path.empty()) {
      cues = load_cue_set_file(spec.cues_path);
    } else {
      cues = select_cue_patterns(
          extract_candidates(train, spec.cue_max_len, spec.cue_min_count),
          spec.cue_entropy_max, std::size_t(std::max(0, spec.cue_top_k)));
    }

    TrialResult trial;
    trial.size = job.size;
    trial.seed = job.seed;
    TrainStats stats;
    TrainOptions opts;
    opts.stats = &stats;
    opts.config_hash = result.config_hash;

    if (spec.C == 1) {
      RuleSequence model;
      if (spec.mode == "standard") {
        model = train_standard(train, templates, spec.threshold, cues, opts);
      } else {
        McConfig mc{spec.R, job.seed, spec.threshold};
        model = train_monte_carlo(train, templates, mc, cues, opts);
      }
      trial.model_rules = model.rules.size();
      const auto report = accuracy(apply_sequence(model, test), test);
      trial.test_accuracy = report.accuracy;
      trial.member0_accuracy = report.accuracy;
    } else {
      McConfig mc{spec.R, job.seed, spec.threshold};
      CommitteeModel committee =
          train_committee(train, templates, mc, spec.C, cues, opts);
      trial.model_rules = 0;
      for (const auto& m : committee.members)
        trial.model_rules += m.rules.size();
      auto tags = tag_with_confidence(committee, test);
      // plurality vote accuracy (m = 1 keeps everything)
      Corpus voted = test;
      std::size_t idx = 0;
      for (auto& d : voted.dialogues)
        for (auto& u : d.utterances) u.working_tag = tags[idx++].tag;
      trial.test_accuracy = accuracy(voted, test).accuracy;
      trial.member0_accuracy =
          accuracy(apply_sequence(committee.members.front(), test), test)
              .accuracy;
      trial.curve = confidence_curve(tags, test, spec.C);
    }
    trial.rules_generated = stats.rules_generated;
    trial.passes = stats.pass_count();
    return trial;
  };

  int threads = 1;
  if (const char* env = std::getenv("TBLTAG_THREADS")) {
    try {
      threads = std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      threads = 1;
    }
  }

  try {
    if (threads <= 1) {
      for (const auto& job : jobs) result.trials.push_back(run_trial(job));
    } else {
      // trials are independent; results are folded in job order
      std::vector<std::future<TrialResult>> futures;
      std::size_t next = 0;
      while (next < jobs.size()) {
        const std::size_t batch =
            std::min<std::size_t>(std::size_t(threads), jobs.size() - next);
        futures.clear();
        for (std::size_t i = 0; i < batch; ++i)
          futures.push_back(std::async(std::launch::async, run_trial,
                                       jobs[next + i]));
        for (auto& f : futures) result.trials.push_back(f.get());
        next += batch;
      }
    }
  } catch (const std::exception& e) {
    result.partial = true;
    result.failure = e.what();
  }

  // aggregation, ordered by size then seed
  for (int size : spec.sizes) {
    std::vector<double> acc, acc0;
    for (const auto& t : result.trials) {
      if (t.size != size) continue;
      acc.push_back(t.test_accuracy);
      acc0.push_back(t.member0_accuracy);
    }
    if (acc.empty()) continue;
    SizeAggregate agg;
    agg.size = size;
    agg.accuracy = mean_std(acc);
    agg.member0_accuracy = mean_std(acc0);
    result.by_size.push_back(agg);
  }
  if (spec.C > 1) {
    const int full_size = *std::max_element(spec.sizes.begin(),
                                            spec.sizes.end());
    for (int m = spec.C; m >= 1; --m) {
      CurveAggregate agg;
      agg.m = m;
      std::vector<double> cov, prec;
      long long covered = 0, covered_correct = 0;
      for (const auto& t : result.trials) {
        if (t.size != full_size || t.curve.empty()) continue;
        for (const auto& row : t.curve) {
          if (row.m != m) continue;
          cov.push_back(row.coverage);
          if (row.precision) prec.push_back(*row.precision);
          covered += row.covered;
          covered_correct += row.covered_correct;
        }
      }
      if (cov.empty()) continue;
      agg.coverage = mean_std(cov);
      agg.precision_macro = mean_std(prec);
      if (covered > 0)
        agg.precision_micro = double(covered_correct) / double(covered);
      result.curves.push_back(agg);
    }
  }
  return result;
}

// --- report writing -------------------------------------------------------------

namespace detail {

inline std::string fixed6(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

// Deterministic report files (no timing columns): trials.tsv, summary.tsv,
// confidence.tsv when applicable, and a human-readable summary.txt.
inline void write_experiment_reports(const ExperimentResult& result,
                                     const ExperimentSpec& spec,
                                     const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string stamp = "# tbltag experiment v1 config " +
                            hash_hex(result.config_hash) + "\n";
  {
    std::ofstream out(fs::path(out_dir) / "trials.tsv");
    out << stamp
        << "size\tseed\taccuracy\tmember0_accuracy\trules_generated\t"
           "passes\tmodel_rules\n";
    for (const auto& t : result.trials) {
      out << t.size << '\t' << t.seed << '\t'
          << detail::fixed6(t.test_accuracy) << '\t'
          << detail::fixed6(t.member0_accuracy) << '\t' << t.rules_generated
          << '\t' << t.passes << '\t' << t.model_rules << '\n';
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "summary.tsv");
    out << stamp
        << "size\tn\tmean\tstd\tmin\tmax\tmember0_mean\tbaseline\n";
    for (const auto& agg : result.by_size) {
      out << agg.size << '\t' << agg.accuracy.n << '\t'
          << detail::fixed6(agg.accuracy.mean) << '\t'
          << detail::fixed6(agg.accuracy.std_dev) << '\t'
          << detail::fixed6(agg.accuracy.min) << '\t'
          << detail::fixed6(agg.accuracy.max) << '\t'
          << detail::fixed6(agg.member0_accuracy.mean) << '\t'
          << detail::fixed6(result.baseline_accuracy) << '\n';
    }
  }
  if (!result.curves.empty()) {
    std::ofstream out(fs::path(out_dir) / "confidence.tsv");
    out << stamp
        << "m\tcoverage_mean\tcoverage_std\tprecision_macro_mean\t"
           "precision_macro_std\tprecision_micro\n";
    for (const auto& c : result.curves) {
      out << c.m << '\t' << detail::fixed6(c.coverage.mean) << '\t'
          << detail::fixed6(c.coverage.std_dev) << '\t'
          << detail::fixed6(c.precision_macro.mean) << '\t'
          << detail::fixed6(c.precision_macro.std_dev) << '\t'
          << (c.precision_micro ? detail::fixed6(*c.precision_micro)
                                : std::string("undefined"))
          << '\n';
    }
  }
  {
    std::ofstream out(fs::path(out_dir) / "summary.txt");
    out << "tbltag experiment report\n";
    out << "config hash: " << hash_hex(result.config_hash) << "\n";
    out << "mode: " << spec.mode << "  R: " << spec.R
        << "  threshold: " << spec.threshold << "  C: " << spec.C << "\n";
    out << "seeds:";
    for (auto s : spec.seeds) out << ' ' << s;
    out << "\n";
    out << "majority baseline accuracy: "
        << detail::fixed6(result.baseline_accuracy) << "\n";
    for (const auto& agg : result.by_size) {
      out << "size " << agg.size << "%: accuracy "
          << detail::fixed6(agg.accuracy.mean) << " +/- "
          << detail::fixed6(agg.accuracy.std_dev) << " over "
          << agg.accuracy.n << " trial(s)\n";
    }
    if (!result.curves.empty()) {
      out << "confidence curve (macro precision over trials; micro pooled):\n";
      for (const auto& c : result.curves) {
        out << "  m=" << c.m << " coverage "
            << detail::fixed6(c.coverage.mean) << " precision "
            << detail::fixed6(c.precision_macro.mean) << " / "
            << (c.precision_micro ? detail::fixed6(*c.precision_micro)
                                  : std::string("undefined"))
            << "\n";
      }
    }
    if (result.partial) {
      out << "PARTIAL RESULTS: a trial failed: " << result.failure << "\n";
    }
  }
}

}  // namespace tbltag
