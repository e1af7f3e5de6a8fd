#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tbltag/corpus.hpp"
#include "tbltag/cue_patterns.hpp"
#include "tbltag/errors.hpp"
#include "tbltag/model.hpp"
#include "tbltag/monte_carlo.hpp"
#include "tbltag/tbl.hpp"

namespace tbltag {

// Per training utterance (flat corpus order): how many previous committee
// members mistagged it, and the resulting score weight 2^c.
struct InstanceWeights {
  std::vector<int> mistag_count;
  std::vector<std::uint64_t> weight;

  static InstanceWeights unit(std::size_t n) {
    InstanceWeights w;
    w.mistag_count.assign(n, 0);
    w.weight.assign(n, 1);
    return w;
  }

  void recompute_weights() {
    weight.resize(mistag_count.size());
    for (std::size_t i = 0; i < mistag_count.size(); ++i) {
      const int c = mistag_count[i];
      if (c < 0 || c > 62) throw DataError("mistag count out of range");
      weight[i] = std::uint64_t(1) << c;
    }
  }
};

// Weighted improvement: success on hard instances counts for 2^c, as if the
// corpus held that many copies of them. With unit weights this equals
// improvement_score exactly.
inline long long weighted_improvement_score(const Rule& rule,
                                            const Corpus& corpus,
                                            const InstanceWeights& weights) {
  if (weights.weight.size() != corpus.utterance_count())
    throw DataError("weights do not cover every training utterance");
  long long delta = 0;
  std::size_t offset = 0;
  for (const auto& d : corpus.dialogues) {
    auto tags = detail::tag_column(d);
    delta += detail::sweep_rule(rule, d, tags, weights.weight.data() + offset)
                 .weighted_delta;
    offset += d.utterances.size();
  }
  return delta;
}

// An ordered list of rule sequences trained under escalating instance
// weights; index 0 is the first-trained member.
struct CommitteeModel {
  std::vector<RuleSequence> members;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;

  int size() const { return static_cast<int>(members.size()); }
};

// Boosting-style committee training. Member 0 trains with unit weights;
// before member k each instance's c is the number of members 0..k-1 whose
// self-application to the training set mistagged it, and member k trains
// against weights 2^c with the threshold compared to the weighted score.
// Member k draws its seed from derive_seed(seed, k).
inline CommitteeModel train_committee(const Corpus& train,
                                      const std::vector<Template>& templates,
                                      const McConfig& mc, int committee_size,
                                      const CuePatternSet& cues,
                                      const TrainOptions& options = {},
                                      std::vector<InstanceWeights>*
                                          weight_trace = nullptr) {
  if (committee_size < 1) throw DataError("committee size must be >= 1");
  mc.validate();
  const std::size_t n = train.utterance_count();
  CommitteeModel model;
  model.seed = mc.seed;
  model.config_hash = options.config_hash;

  InstanceWeights weights = InstanceWeights::unit(n);
  detail::Engine engine(train, templates, cues);
  for (int k = 0; k < committee_size; ++k) {
    if (weight_trace) weight_trace->push_back(weights);
    engine.set_weights(weights.weight);
    McConfig member_cfg = mc;
    member_cfg.seed = derive_seed(mc.seed, std::uint64_t(k));
    TrainOptions member_opts = options;  // a shared stats sink accumulates
    RuleSequence member =
        engine.train(detail::Engine::Mode::MonteCarlo, member_cfg.threshold,
                     member_cfg.R, member_cfg.seed, member_opts);
    // self-application to the training set decides which instances the
    // member mistagged
    Corpus tagged = apply_sequence(member, train);
    std::size_t i = 0;
    for (const auto& d : tagged.dialogues) {
      for (const auto& u : d.utterances) {
        if (u.working_tag != u.gold_tag) weights.mistag_count[i] += 1;
        ++i;
      }
    }
    weights.recompute_weights();
    model.members.push_back(std::move(member));
  }
  return model;
}

// --- confidence tagging -----------------------------------------------------

struct TagWithConfidence {
  std::string dialogue_id;
  int position = 0;
  std::string tag;
  int confidence = 0;  // committee members voting for this tag

  bool operator==(const TagWithConfidence& o) const {
    return dialogue_id == o.dialogue_id && position == o.position &&
           tag == o.tag && confidence == o.confidence;
  }
};

// Each member independently tags a fresh dummy-initialized copy; per
// utterance the plurality tag wins with ties broken in favor of the
// earliest member's vote, and the confidence is that tag's vote count.
inline std::vector<TagWithConfidence> tag_with_confidence(
    const CommitteeModel& model, const Corpus& corpus) {
  if (model.members.empty()) throw DataError("empty committee");
  std::vector<Corpus> tagged;
  tagged.reserve(model.members.size());
  for (const auto& member : model.members)
    tagged.push_back(apply_sequence(member, corpus));

  std::vector<TagWithConfidence> out;
  for (std::size_t di = 0; di < corpus.dialogues.size(); ++di) {
    const Dialogue& d = corpus.dialogues[di];
    for (std::size_t ui = 0; ui < d.utterances.size(); ++ui) {
      std::map<std::string, int> votes;
      std::map<std::string, int> first_voter;
      for (std::size_t m = 0; m < tagged.size(); ++m) {
        const std::string& v =
            tagged[m].dialogues[di].utterances[ui].working_tag;
        if (votes.emplace(v, 0).second)
          first_voter[v] = static_cast<int>(m);
        votes[v] += 1;
      }
      TagWithConfidence t;
      t.dialogue_id = d.id;
      t.position = static_cast<int>(ui);
      int best_votes = -1;
      int best_first = 0;
      for (const auto& [tag, count] : votes) {
        const int first = first_voter[tag];
        if (count > best_votes ||
            (count == best_votes && first < best_first)) {
          best_votes = count;
          best_first = first;
          t.tag = tag;
        }
      }
      t.confidence = best_votes;
      out.push_back(std::move(t));
    }
  }
  return out;
}

// Partition by confidence >= m: (tagged subset, abstained subset).
inline std::pair<std::vector<TagWithConfidence>, std::vector<TagWithConfidence>>
threshold_filter(const std::vector<TagWithConfidence>& tags, int m, int C) {
  if (m < 1 || m > C)
    throw DataError("minimum confidence " + std::to_string(m) +
                    " out of range [1, " + std::to_string(C) + "]");
  std::pair<std::vector<TagWithConfidence>, std::vector<TagWithConfidence>>
      out;
  for (const auto& t : tags)
    (t.confidence >= m ? out.first : out.second).push_back(t);
  return out;
}

// --- .tblc format ------------------------------------------------------------
//
// Header `tblc v1 C=<n> seed=<u64>`, then each member's .tblm block
// delimited by `---member k---`.

inline void save_committee(const CommitteeModel& model, std::ostream& out) {
  out << "tblc v1 C=" << model.members.size() << " seed=" << model.seed
      << '\n';
  for (std::size_t k = 0; k < model.members.size(); ++k) {
    out << "---member " << k << "---\n";
    save_model(model.members[k], out);
  }
}

inline CommitteeModel load_committee(std::istream& in) {
  CommitteeModel model;
  std::string line;
  int lineno = 1;
  if (!std::getline(in, line)) throw ParseError("empty committee file", 1);
  std::size_t expected = 0;
  {
    std::istringstream hs(line);
    std::string magic, version, cfield, sfield;
    if (!(hs >> magic >> version >> cfield >> sfield) || magic != "tblc")
      throw ParseError("bad committee header", lineno);
    if (version != "v1")
      throw ParseError("unsupported committee version '" + version + "'",
                       lineno);
    if (cfield.rfind("C=", 0) != 0 || sfield.rfind("seed=", 0) != 0)
      throw ParseError("bad committee header fields", lineno);
    try {
      expected = std::stoull(cfield.substr(2));
      model.seed = std::stoull(sfield.substr(5));
    } catch (const std::exception&) {
      throw ParseError("bad committee header numbers", lineno);
    }
  }
  std::string block;
  bool in_member = false;
  auto flush = [&]() {
    if (!in_member) return;
    std::istringstream ms(block);
    model.members.push_back(load_model(ms));
    block.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("---member ", 0) == 0) {
      flush();
      in_member = true;
      continue;
    }
    if (!in_member)
      throw ParseError("content before first member block", lineno);
    block += line;
    block += '\n';
  }
  flush();
  if (model.members.size() != expected)
    throw DataError("committee declares " + std::to_string(expected) +
                    " members but contains " +
                    std::to_string(model.members.size()));
  if (!model.members.empty())
    model.config_hash = model.members.front().config_hash;
  return model;
}

inline CommitteeModel load_committee_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open committee file: " + path);
  return load_committee(in);
}

inline void save_committee_file(const CommitteeModel& model,
                                const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write committee file: " + path);
  save_committee(model, out);
}

}  // namespace tbltag
