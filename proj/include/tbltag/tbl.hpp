#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "tbltag/corpus.hpp"
#include "tbltag/cue_patterns.hpp"
#include "tbltag/errors.hpp"
#include "tbltag/features.hpp"
#include "tbltag/model.hpp"

namespace tbltag {

namespace detail {

// Evaluates an instance against an explicit tag column instead of the
// corpus's stored working tags, so hypothetical sweeps never touch the
// corpus.
inline bool evaluate_with_tags(const ConditionInstance& inst,
                               const Dialogue& d,
                               const std::vector<std::string>& tags,
                               int pos) {
  if (inst.cond.feature == FeatureKind::Tag) {
    const int t = pos + inst.cond.distance;
    const std::string& observed =
        (t < 0 || t >= static_cast<int>(tags.size())) ? kNoneTag
                                                      : tags[std::size_t(t)];
    return observed == inst.sym_value;
  }
  // non-tag features never read the tag column
  switch (inst.cond.feature) {
    case FeatureKind::Length: {
      const int len = observed_length(d, pos, inst.cond.distance);
      return inst.op == TestOp::Equals ? len == inst.int_value
                                       : len < inst.int_value;
    }
    case FeatureKind::Speaker:
      return observed_speaker(d, pos, inst.cond.distance) == inst.sym_value;
    case FeatureKind::SpeakerChange:
      return observed_speaker_change(d, pos, inst.cond.distance) ==
             inst.bool_value;
    case FeatureKind::Cue: {
      const int t = pos + inst.cond.distance;
      if (t < 0 || t >= static_cast<int>(d.utterances.size())) return false;
      const auto& tokens = d.utterances[std::size_t(t)].tokens;
      for (const auto& p : inst.patterns)
        if (!pattern_occurs(p, tokens)) return false;
      return true;
    }
    default:
      break;
  }
  throw InternalError("evaluate_with_tags: unreachable");
}

struct SweepOutcome {
  int changed = 0;
  long long correct_delta = 0;          // unweighted
  long long weighted_delta = 0;
};

// One left-to-right sweep of a rule over a dialogue's tag column. Firing
// decisions at position k read the tags as they stand when k is visited, so
// a rule testing the previous tag sees a possibly-already-rewritten value.
// `weights` may be empty (all ones).
inline SweepOutcome sweep_rule(const Rule& rule, const Dialogue& d,
                               std::vector<std::string>& tags,
                               const std::uint64_t* weights = nullptr) {
  SweepOutcome out;
  const int n = static_cast<int>(d.utterances.size());
  for (int k = 0; k < n; ++k) {
    bool fires = true;
    for (const auto& inst : rule.antecedent) {
      if (!evaluate_with_tags(inst, d, tags, k)) {
        fires = false;
        break;
      }
    }
    if (!fires) continue;
    std::string& cur = tags[std::size_t(k)];
    if (cur == rule.new_tag) continue;
    const Utterance& u = d.utterances[std::size_t(k)];
    if (u.tagged()) {
      const long long w =
          weights ? static_cast<long long>(weights[std::size_t(k)]) : 1;
      if (cur == u.gold_tag) {
        out.correct_delta -= 1;
        out.weighted_delta -= w;
      } else if (rule.new_tag == u.gold_tag) {
        out.correct_delta += 1;
        out.weighted_delta += w;
      }
    }
    cur = rule.new_tag;
    ++out.changed;
  }
  return out;
}

inline std::vector<std::string> tag_column(const Dialogue& d) {
  std::vector<std::string> tags;
  tags.reserve(d.utterances.size());
  for (const auto& u : d.utterances) tags.push_back(u.working_tag);
  return tags;
}

}  // namespace detail

// Hypothetical improvement: correct count after one full sweep minus the
// count before. Delta-counted over firing positions; the corpus is never
// modified.
inline long long improvement_score(const Rule& rule, const Corpus& corpus) {
  long long delta = 0;
  for (const auto& d : corpus.dialogues) {
    auto tags = detail::tag_column(d);
    delta += detail::sweep_rule(rule, d, tags).correct_delta;
  }
  return delta;
}

// Applies the rule in place with a single left-to-right sweep per dialogue.
// Returns the number of tags changed.
inline int apply_rule(const Rule& rule, Corpus& corpus) {
  int changed = 0;
  for (auto& d : corpus.dialogues) {
    auto tags = detail::tag_column(d);
    changed += detail::sweep_rule(rule, d, tags).changed;
    for (std::size_t i = 0; i < tags.size(); ++i)
      d.utterances[i].working_tag = std::move(tags[i]);
  }
  return changed;
}

// Applies the learned rules in emission order to a freshly dummy-initialized
// copy of the corpus. Pure function of (model, corpus static fields).
inline Corpus apply_sequence(const RuleSequence& model, Corpus corpus) {
  corpus = initialize_dummy(std::move(corpus));
  for (const auto& tr : model.rules) apply_rule(tr.rule, corpus);
  return corpus;
}

// Union over every incorrectly tagged position of all template
// instantiations targeting the gold tag, deduplicated. Deterministic order.
inline std::vector<Rule> generate_all_rules(const Corpus& corpus,
                                            const std::vector<Template>& tmpls,
                                            const CuePatternSet& cues) {
  std::set<Rule> out;
  for (std::size_t di = 0; di < corpus.dialogues.size(); ++di) {
    const Dialogue& d = corpus.dialogues[di];
    for (int k = 0; k < static_cast<int>(d.utterances.size()); ++k) {
      const Utterance& u = d.utterances[std::size_t(k)];
      if (!u.tagged() || u.working_tag == u.gold_tag) continue;
      for (const auto& t : tmpls) {
        for (auto& r : instantiate_rules(t, corpus, di, k, u.gold_tag, cues))
          out.insert(std::move(r));
      }
    }
  }
  return std::vector<Rule>(out.begin(), out.end());
}

// --- training --------------------------------------------------------------

struct PassStats {
  std::uint64_t generated = 0;   // rules generated this pass
  std::uint64_t incorrect = 0;   // incorrect tags at pass start
  std::uint64_t unique = 0;      // distinct candidates scored
};

struct EmissionStats {
  long long score = 0;           // (weighted) improvement at emission
  long long correct_before = 0;  // weighted-correct before application
  long long correct_after = 0;
  std::uint64_t fired = 0;
};

struct TrainStats {
  std::vector<PassStats> passes;
  std::vector<EmissionStats> emissions;
  std::uint64_t rules_generated = 0;

  int pass_count() const { return static_cast<int>(passes.size()); }
};

struct TrainOptions {
  std::uint64_t budget = 0;       // generated-rule budget; 0 = unlimited
  std::uint64_t config_hash = 0;  // stamped into the model
  TrainStats* stats = nullptr;    // optional instrumentation sink
};

}  // namespace tbltag

#include "tbltag/detail/engine.hpp"

namespace tbltag {

// Standard Transformation-Based Learning: from a dummy-initialized corpus,
// repeatedly emit the highest-improvement rule and apply it, until the best
// improvement falls below the threshold. Ties prefer fewer conditions, then
// the earlier template, then lexicographic rule serialization.
inline RuleSequence train_standard(const Corpus& train,
                                   const std::vector<Template>& templates,
                                   long long threshold,
                                   const CuePatternSet& cues,
                                   const TrainOptions& options = {}) {
  if (threshold < 1) throw DataError("threshold must be >= 1");
  detail::Engine engine(train, templates, cues);
  return engine.train(detail::Engine::Mode::Standard, threshold, 0, 0,
                      options);
}

}  // namespace tbltag
