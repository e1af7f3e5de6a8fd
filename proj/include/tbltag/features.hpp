#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <string>
#include <tuple>
#include <vector>

#include "tbltag/corpus.hpp"
#include "tbltag/cue_patterns.hpp"
#include "tbltag/errors.hpp"

namespace tbltag {

// Utterance features a condition may probe. CUE is set-valued: the observed
// value is the subset of the configured cue patterns present in the
// utterance.
enum class FeatureKind { Length, Speaker, SpeakerChange, Tag, Cue };

inline std::string to_string(FeatureKind f) {
  switch (f) {
    case FeatureKind::Length: return "length";
    case FeatureKind::Speaker: return "speaker";
    case FeatureKind::SpeakerChange: return "speaker_change";
    case FeatureKind::Tag: return "tag";
    case FeatureKind::Cue: return "cue";
  }
  throw InternalError("bad FeatureKind");
}

inline FeatureKind feature_from_string(const std::string& s) {
  if (s == "length") return FeatureKind::Length;
  if (s == "speaker") return FeatureKind::Speaker;
  if (s == "speaker_change") return FeatureKind::SpeakerChange;
  if (s == "tag") return FeatureKind::Tag;
  if (s == "cue") return FeatureKind::Cue;
  throw DataError("unknown feature '" + s + "'");
}

// A feature probed at a relative utterance offset (0 = current, -1 =
// preceding). TAG at distance 0 is forbidden: a rule may not condition on
// the very tag it rewrites.
struct Condition {
  FeatureKind feature = FeatureKind::Length;
  int distance = 0;

  auto operator<=>(const Condition&) const = default;
};

inline void validate_condition(const Condition& c, int window_radius = 0) {
  if (c.feature == FeatureKind::Tag && c.distance == 0)
    throw DataError("tag@0 conditions are forbidden");
  if (window_radius > 0 && std::abs(c.distance) > window_radius)
    throw DataError("condition distance " + std::to_string(c.distance) +
                    " outside window radius " + std::to_string(window_radius));
}

inline std::string to_string(const Condition& c) {
  return to_string(c.feature) + ":" + std::to_string(c.distance);
}

// Parses "feature:distance" entries such as "cue:0" or "tag:-1".
inline Condition parse_condition(const std::string& s) {
  std::size_t colon = s.rfind(':');
  if (colon == std::string::npos || colon + 1 >= s.size())
    throw DataError("bad condition '" + s + "' (expected feature:distance)");
  Condition c;
  c.feature = feature_from_string(s.substr(0, colon));
  try {
    std::size_t used = 0;
    c.distance = std::stoi(s.substr(colon + 1), &used);
    if (used != s.size() - colon - 1) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw DataError("bad condition distance in '" + s + "'");
  }
  validate_condition(c);
  return c;
}

inline std::vector<Condition> parse_condition_list(const std::string& csv,
                                                   int window_radius = 0) {
  std::vector<Condition> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    std::size_t comma = csv.find(',', start);
    std::string item = csv.substr(
        start, comma == std::string::npos ? std::string::npos : comma - start);
    item = detail::trim(item);
    if (!item.empty()) {
      Condition c = parse_condition(item);
      validate_condition(c, window_radius);
      out.push_back(c);
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

enum class TestOp { Equals, LessThan, Includes };

inline std::string to_string(TestOp op) {
  switch (op) {
    case TestOp::Equals: return "eq";
    case TestOp::LessThan: return "lt";
    case TestOp::Includes: return "includes";
  }
  throw InternalError("bad TestOp");
}

// A condition bound to a concrete test. Payload fields by feature:
//   Length        -> int_value with Equals or LessThan
//   Speaker, Tag  -> sym_value with Equals (may be the NONE sentinel)
//   SpeakerChange -> bool_value with Equals
//   Cue           -> patterns (non-empty, sorted) with Includes
struct ConditionInstance {
  Condition cond;
  TestOp op = TestOp::Equals;
  long long int_value = 0;
  std::string sym_value;
  bool bool_value = false;
  std::vector<std::vector<std::string>> patterns;

  auto key() const {
    return std::tie(cond, op, int_value, sym_value, bool_value, patterns);
  }
  bool operator==(const ConditionInstance& o) const {
    return key() == o.key();
  }
  bool operator<(const ConditionInstance& o) const { return key() < o.key(); }
};

// A rule template: a set of conditions with unbound values. The empty
// template is legal and instantiates to unconditional rules.
struct Template {
  std::vector<Condition> conditions;

  bool operator==(const Template& o) const {
    return conditions == o.conditions;
  }
};

// All 2^n subsets of the given conditions in binary-counter order over the
// input list: subset m contains conditions[j] iff bit j of m is set, so
// index 0 is the empty template.
inline std::vector<Template> enumerate_templates(
    const std::vector<Condition>& conditions) {
  const std::size_t n = conditions.size();
  if (n > 20)
    throw DataError("refusing to enumerate 2^" + std::to_string(n) +
                    " templates (limit n <= 20)");
  for (std::size_t i = 0; i < n; ++i) {
    validate_condition(conditions[i]);
    for (std::size_t j = i + 1; j < n; ++j)
      if (conditions[i] == conditions[j])
        throw DataError("duplicate condition '" + to_string(conditions[i]) +
                        "'");
  }
  std::vector<Template> out;
  out.reserve(std::size_t(1) << n);
  for (std::uint32_t mask = 0; mask < (std::uint32_t(1) << n); ++mask) {
    Template t;
    for (std::size_t j = 0; j < n; ++j)
      if (mask & (std::uint32_t(1) << j)) t.conditions.push_back(conditions[j]);
    out.push_back(std::move(t));
  }
  return out;
}

// --- observation ----------------------------------------------------------
//
// Out-of-bounds distances are defined, not errors: SPEAKER and TAG read the
// NONE sentinel, LENGTH reads 0, CUE reads the empty set, SPEAKER_CHANGE
// reads false. Context never crosses a dialogue boundary.

inline int observed_length(const Dialogue& d, int pos, int distance) {
  const int t = pos + distance;
  if (t < 0 || t >= static_cast<int>(d.utterances.size())) return 0;
  return static_cast<int>(d.utterances[std::size_t(t)].tokens.size());
}

inline const std::string& observed_speaker(const Dialogue& d, int pos,
                                           int distance) {
  const int t = pos + distance;
  if (t < 0 || t >= static_cast<int>(d.utterances.size())) return kNoneTag;
  return d.utterances[std::size_t(t)].speaker;
}

inline const std::string& observed_tag(const Dialogue& d, int pos,
                                       int distance) {
  const int t = pos + distance;
  if (t < 0 || t >= static_cast<int>(d.utterances.size())) return kNoneTag;
  return d.utterances[std::size_t(t)].working_tag;
}

// The first utterance of a dialogue counts as a speaker change (its previous
// speaker is the NONE sentinel).
inline bool observed_speaker_change(const Dialogue& d, int pos, int distance) {
  const int t = pos + distance;
  if (t < 0 || t >= static_cast<int>(d.utterances.size())) return false;
  if (t == 0) return true;
  return d.utterances[std::size_t(t)].speaker !=
         d.utterances[std::size_t(t - 1)].speaker;
}

// Pure function of the corpus's current working tags and static fields.
inline bool evaluate(const ConditionInstance& inst, const Corpus& corpus,
                     std::size_t dialogue_index, int position) {
  const Dialogue& d = corpus.dialogues.at(dialogue_index);
  if (position < 0 || position >= static_cast<int>(d.utterances.size()))
    throw DataError("evaluate: position out of range");
  switch (inst.cond.feature) {
    case FeatureKind::Length: {
      const int len = observed_length(d, position, inst.cond.distance);
      if (inst.op == TestOp::Equals) return len == inst.int_value;
      if (inst.op == TestOp::LessThan) return len < inst.int_value;
      break;
    }
    case FeatureKind::Speaker:
      if (inst.op == TestOp::Equals)
        return observed_speaker(d, position, inst.cond.distance) ==
               inst.sym_value;
      break;
    case FeatureKind::SpeakerChange:
      if (inst.op == TestOp::Equals)
        return observed_speaker_change(d, position, inst.cond.distance) ==
               inst.bool_value;
      break;
    case FeatureKind::Tag:
      if (inst.op == TestOp::Equals)
        return observed_tag(d, position, inst.cond.distance) == inst.sym_value;
      break;
    case FeatureKind::Cue: {
      if (inst.op != TestOp::Includes) break;
      const int t = position + inst.cond.distance;
      if (t < 0 || t >= static_cast<int>(d.utterances.size())) return false;
      const auto& tokens = d.utterances[std::size_t(t)].tokens;
      for (const auto& p : inst.patterns)
        if (!pattern_occurs(p, tokens)) return false;
      return true;
    }
  }
  throw DataError("evaluate: test op does not match feature");
}

// --- rules ---------------------------------------------------------------

// An instantiated antecedent plus a replacement tag. A rule fires at a
// position iff every antecedent instance evaluates true there; firing
// rewrites only the working tag at that position.
struct Rule {
  std::vector<ConditionInstance> antecedent;  // kept canonically sorted
  std::string new_tag;

  void canonicalize() { std::sort(antecedent.begin(), antecedent.end()); }

  bool operator==(const Rule& o) const {
    return new_tag == o.new_tag && antecedent == o.antecedent;
  }
  bool operator<(const Rule& o) const {
    if (antecedent != o.antecedent) return antecedent < o.antecedent;
    return new_tag < o.new_tag;
  }

  bool fires_at(const Corpus& corpus, std::size_t dialogue_index,
                int position) const {
    for (const auto& inst : antecedent)
      if (!evaluate(inst, corpus, dialogue_index, position)) return false;
    return true;
  }
};

namespace detail {

// Condition instances that hold at this position, in a deterministic order.
// LENGTH yields both the equality and the strict threshold test; CUE yields
// one INCLUDES per matching pattern plus one per matching pair (pairs are
// the cap on set-valued instantiation).
inline std::vector<ConditionInstance> instance_options(
    const Condition& cond, const Dialogue& d, int pos,
    const CuePatternSet& cues) {
  std::vector<ConditionInstance> out;
  ConditionInstance base;
  base.cond = cond;
  switch (cond.feature) {
    case FeatureKind::Length: {
      const int len = observed_length(d, pos, cond.distance);
      base.op = TestOp::Equals;
      base.int_value = len;
      out.push_back(base);
      base.op = TestOp::LessThan;
      base.int_value = len + 1;
      out.push_back(base);
      break;
    }
    case FeatureKind::Speaker:
      base.op = TestOp::Equals;
      base.sym_value = observed_speaker(d, pos, cond.distance);
      out.push_back(base);
      break;
    case FeatureKind::SpeakerChange:
      base.op = TestOp::Equals;
      base.bool_value = observed_speaker_change(d, pos, cond.distance);
      out.push_back(base);
      break;
    case FeatureKind::Tag:
      base.op = TestOp::Equals;
      base.sym_value = observed_tag(d, pos, cond.distance);
      out.push_back(base);
      break;
    case FeatureKind::Cue: {
      const int t = pos + cond.distance;
      if (t < 0 || t >= static_cast<int>(d.utterances.size())) break;
      const auto& tokens = d.utterances[std::size_t(t)].tokens;
      std::vector<const CuePattern*> matching;
      for (const auto& p : cues.patterns)
        if (pattern_occurs(p.tokens, tokens)) matching.push_back(&p);
      base.op = TestOp::Includes;
      for (const auto* p : matching) {
        base.patterns = {p->tokens};
        out.push_back(base);
      }
      for (std::size_t i = 0; i < matching.size(); ++i) {
        for (std::size_t j = i + 1; j < matching.size(); ++j) {
          base.patterns = {matching[i]->tokens, matching[j]->tokens};
          std::sort(base.patterns.begin(), base.patterns.end());
          out.push_back(base);
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace detail

// Every rule that (i) binds one true-here instance per template condition
// and (ii) rewrites to target_tag. Deterministic enumeration order.
inline std::vector<Rule> instantiate_rules(const Template& tmpl,
                                           const Corpus& corpus,
                                           std::size_t dialogue_index,
                                           int position,
                                           const std::string& target_tag,
                                           const CuePatternSet& cues) {
  const Dialogue& d = corpus.dialogues.at(dialogue_index);
  std::vector<std::vector<ConditionInstance>> options;
  for (const auto& cond : tmpl.conditions) {
    validate_condition(cond);
    options.push_back(detail::instance_options(cond, d, position, cues));
    if (options.back().empty()) return {};  // no instantiation fires here
  }
  std::vector<Rule> out;
  std::vector<std::size_t> pick(options.size(), 0);
  while (true) {
    Rule r;
    r.new_tag = target_tag;
    for (std::size_t i = 0; i < options.size(); ++i)
      r.antecedent.push_back(options[i][pick[i]]);
    r.canonicalize();
    out.push_back(std::move(r));
    std::size_t i = options.size();
    while (i > 0) {
      if (++pick[i - 1] < options[i - 1].size()) break;
      pick[i - 1] = 0;
      --i;
    }
    if (i == 0) break;
  }
  return out;
}

}  // namespace tbltag
