#pragma once

// Shared fixtures and independent oracles for the test suite. The oracles
// here deliberately re-derive results with the most naive method available
// (clone-apply-count scoring, nested-loop enumeration) so they stay
// independent of the library's optimized paths.

#include <array>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "tbltag/tbltag.hpp"

namespace testsup {

using namespace tbltag;

inline std::string fixture_path(const std::string& name) {
  return std::string(TBLTAG_FIXTURES) + "/" + name;
}

inline Corpus figure1() { return load_corpus(fixture_path("figure1.dacts")); }

inline RuleSequence figure2() {
  return load_model_file(fixture_path("figure2.tblm"));
}

inline std::vector<std::string> working_tags(const Corpus& c) {
  std::vector<std::string> out;
  for (const auto& d : c.dialogues)
    for (const auto& u : d.utterances) out.push_back(u.working_tag);
  return out;
}

inline std::vector<std::string> gold_tags(const Corpus& c) {
  std::vector<std::string> out;
  for (const auto& d : c.dialogues)
    for (const auto& u : d.utterances) out.push_back(u.gold_tag);
  return out;
}

// Builds a one-dialogue corpus from (speaker, text, gold) rows.
inline Corpus make_dialogue(
    const std::vector<std::array<std::string, 3>>& rows,
    const std::string& id = "d1") {
  Corpus c;
  Dialogue d{id, {}};
  int pos = 0;
  for (const auto& row : rows) {
    Utterance u;
    u.dialogue_id = id;
    u.position = pos++;
    u.speaker = row[0];
    u.tokens = tokenize(row[1]);
    u.gold_tag = row[2];
    u.working_tag = row[2].empty() ? kDummyTag : row[2];
    if (!row[2].empty()) c.tagset.insert(row[2]);
    d.utterances.push_back(std::move(u));
  }
  c.dialogues.push_back(std::move(d));
  c.validate();
  return c;
}

// --- independent oracles ----------------------------------------------------

// Clone-apply-count: the brute-force improvement oracle. Applies the rule to
// a copy with the library's public sweep and counts correct tags before and
// after, optionally weighting by 2^c-style weights in flat order.
inline long long clone_apply_improvement(
    const Rule& rule, const Corpus& corpus,
    const std::vector<std::uint64_t>* weights = nullptr) {
  auto count_correct = [&](const Corpus& c) {
    long long total = 0;
    std::size_t i = 0;
    for (const auto& d : c.dialogues)
      for (const auto& u : d.utterances) {
        const long long w =
            weights ? static_cast<long long>((*weights)[i]) : 1;
        if (u.tagged() && u.working_tag == u.gold_tag) total += w;
        ++i;
      }
    return total;
  };
  Corpus copy = corpus;
  const long long before = count_correct(copy);
  apply_rule(rule, copy);
  return count_correct(copy) - before;
}

// Exhaustive candidate enumeration straight from the definitions: for every
// incorrect position and template, bind each condition to every test that
// holds there (length eq/lt, symbol eq, cue singletons and pairs).
inline std::set<Rule> enumerate_candidates(const Corpus& corpus,
                                           const std::vector<Template>& tmpls,
                                           const CuePatternSet& cues) {
  std::set<Rule> out;
  for (std::size_t di = 0; di < corpus.dialogues.size(); ++di) {
    const Dialogue& d = corpus.dialogues[di];
    for (int k = 0; k < static_cast<int>(d.utterances.size()); ++k) {
      const Utterance& u = d.utterances[std::size_t(k)];
      if (!u.tagged() || u.working_tag == u.gold_tag) continue;
      for (const auto& tmpl : tmpls) {
        std::vector<std::vector<ConditionInstance>> options;
        bool feasible = true;
        for (const auto& cond : tmpl.conditions) {
          std::vector<ConditionInstance> opts;
          ConditionInstance inst;
          inst.cond = cond;
          const int t = k + cond.distance;
          const bool oob =
              t < 0 || t >= static_cast<int>(d.utterances.size());
          switch (cond.feature) {
            case FeatureKind::Length: {
              const int len =
                  oob ? 0
                      : static_cast<int>(
                            d.utterances[std::size_t(t)].tokens.size());
              inst.op = TestOp::Equals;
              inst.int_value = len;
              opts.push_back(inst);
              inst.op = TestOp::LessThan;
              inst.int_value = len + 1;
              opts.push_back(inst);
              break;
            }
            case FeatureKind::Speaker:
              inst.op = TestOp::Equals;
              inst.sym_value =
                  oob ? kNoneTag : d.utterances[std::size_t(t)].speaker;
              opts.push_back(inst);
              break;
            case FeatureKind::SpeakerChange: {
              inst.op = TestOp::Equals;
              if (oob) {
                inst.bool_value = false;
              } else if (t == 0) {
                inst.bool_value = true;
              } else {
                inst.bool_value = d.utterances[std::size_t(t)].speaker !=
                                  d.utterances[std::size_t(t - 1)].speaker;
              }
              opts.push_back(inst);
              break;
            }
            case FeatureKind::Tag:
              inst.op = TestOp::Equals;
              inst.sym_value =
                  oob ? kNoneTag : d.utterances[std::size_t(t)].working_tag;
              opts.push_back(inst);
              break;
            case FeatureKind::Cue: {
              if (oob) break;
              const auto& tokens = d.utterances[std::size_t(t)].tokens;
              std::vector<const CuePattern*> hit;
              for (const auto& p : cues.patterns)
                if (pattern_occurs(p.tokens, tokens)) hit.push_back(&p);
              inst.op = TestOp::Includes;
              for (const auto* p : hit) {
                inst.patterns = {p->tokens};
                opts.push_back(inst);
              }
              for (std::size_t a = 0; a < hit.size(); ++a)
                for (std::size_t b = a + 1; b < hit.size(); ++b) {
                  inst.patterns = {hit[a]->tokens, hit[b]->tokens};
                  std::sort(inst.patterns.begin(), inst.patterns.end());
                  opts.push_back(inst);
                }
              break;
            }
          }
          if (opts.empty()) {
            feasible = false;
            break;
          }
          options.push_back(std::move(opts));
        }
        if (!feasible) continue;
        std::vector<std::size_t> pick(options.size(), 0);
        while (true) {
          Rule r;
          r.new_tag = u.gold_tag;
          for (std::size_t i = 0; i < options.size(); ++i)
            r.antecedent.push_back(options[i][pick[i]]);
          r.canonicalize();
          out.insert(std::move(r));
          std::size_t i = options.size();
          while (i > 0) {
            if (++pick[i - 1] < options[i - 1].size()) break;
            pick[i - 1] = 0;
            --i;
          }
          if (i == 0) break;
        }
      }
    }
  }
  return out;
}

// Template index of a rule under the given template list (the template is
// recoverable from the antecedent's condition set); smallest index wins.
inline std::size_t template_index_of(const Rule& rule,
                                     const std::vector<Template>& tmpls) {
  std::set<Condition> conds;
  for (const auto& inst : rule.antecedent) conds.insert(inst.cond);
  for (std::size_t i = 0; i < tmpls.size(); ++i) {
    std::set<Condition> t(tmpls[i].conditions.begin(),
                          tmpls[i].conditions.end());
    if (t == conds) return i;
  }
  return tmpls.size();
}

// Brute-force argmax with the declared tie-break: highest clone-apply
// improvement, then fewest conditions, then earliest template, then
// lexicographic serialization.
struct OracleChoice {
  bool found = false;
  Rule rule;
  long long score = 0;
};

inline OracleChoice oracle_best_rule(
    const Corpus& corpus, const std::vector<Template>& tmpls,
    const CuePatternSet& cues,
    const std::vector<std::uint64_t>* weights = nullptr) {
  OracleChoice best;
  for (const auto& rule : enumerate_candidates(corpus, tmpls, cues)) {
    const long long score = clone_apply_improvement(rule, corpus, weights);
    if (!best.found) {
      best = {true, rule, score};
      continue;
    }
    const auto key = [&](const Rule& r, long long s) {
      return std::make_tuple(-s, r.antecedent.size(),
                             template_index_of(r, tmpls), rule_sort_key(r));
    };
    if (key(rule, score) < key(best.rule, best.score))
      best = {true, rule, score};
  }
  return best;
}

// Random small corpora for property tests and oracle-equivalence checks.
struct RandomCorpusParams {
  int dialogues = 3;
  int utterances_min = 3;
  int utterances_max = 8;
  int tags = 4;
  int vocab = 12;
  int tokens_min = 1;
  int tokens_max = 5;
  int speakers = 2;
};

inline Corpus random_corpus(const RandomCorpusParams& p, SplitMix64& rng) {
  Corpus c;
  std::vector<std::string> tag_names;
  for (int i = 0; i < p.tags; ++i) tag_names.push_back("T" + std::to_string(i));
  std::vector<std::string> words;
  for (int i = 0; i < p.vocab; ++i) words.push_back("w" + std::to_string(i));
  for (int d = 0; d < p.dialogues; ++d) {
    Dialogue dlg{"d" + std::to_string(d), {}};
    const int count =
        p.utterances_min +
        int(rng.below(std::uint64_t(p.utterances_max - p.utterances_min + 1)));
    for (int k = 0; k < count; ++k) {
      Utterance u;
      u.dialogue_id = dlg.id;
      u.position = k;
      u.speaker = "s" + std::to_string(rng.below(std::uint64_t(p.speakers)));
      const int len =
          p.tokens_min +
          int(rng.below(std::uint64_t(p.tokens_max - p.tokens_min + 1)));
      for (int t = 0; t < len; ++t)
        u.tokens.push_back(words[rng.below(words.size())]);
      u.gold_tag = tag_names[rng.below(tag_names.size())];
      u.working_tag = u.gold_tag;
      c.tagset.insert(u.gold_tag);
      dlg.utterances.push_back(std::move(u));
    }
    c.dialogues.push_back(std::move(dlg));
  }
  c.validate();
  return c;
}

// A cue set containing every unigram of the corpus (handy for small tests).
inline CuePatternSet unigram_cues(const Corpus& c) {
  std::set<std::vector<std::string>> grams;
  for (const auto& d : c.dialogues)
    for (const auto& u : d.utterances)
      for (const auto& t : u.tokens) grams.insert({t});
  CuePatternSet set;
  for (const auto& g : grams) {
    CuePattern p;
    p.tokens = g;
    set.patterns.push_back(std::move(p));
  }
  return set;
}

}  // namespace testsup
