#pragma once

// Training engine. Works on an interned, flattened snapshot of the corpus so
// candidate generation and scoring stay cheap; emitted rules are converted
// back to the public string form. Scoring is exact under the left-to-right
// sweep semantics: a candidate that reads tags at negative distances is
// simulated with an overlay instead of being tallied against frozen tags,
// so the emitted score always equals the realized change in (weighted)
// correct count.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tbltag/corpus.hpp"
#include "tbltag/cue_patterns.hpp"
#include "tbltag/errors.hpp"
#include "tbltag/features.hpp"
#include "tbltag/model.hpp"
#include "tbltag/rng.hpp"

namespace tbltag::detail {

// Packed condition-instance word:
//   [feature:3][op:2][distance+64:7][v1:26][v2:26]
// v2 is kPackedNil except for cue pairs. Packed order is only used as the
// dedup key, not as the public serialization order.
inline constexpr std::uint64_t kPackedNil = (1u << 26) - 1;

inline std::uint64_t pack_cond(FeatureKind f, TestOp op, int distance,
                               std::uint32_t v1,
                               std::uint32_t v2 = kPackedNil) {
  return (std::uint64_t(unsigned(f)) << 61) | (std::uint64_t(unsigned(op)) << 59) |
         (std::uint64_t(unsigned(distance + 64) & 0x7f) << 52) |
         (std::uint64_t(v1 & kPackedNil) << 26) | std::uint64_t(v2 & kPackedNil);
}

struct PackedCond {
  FeatureKind feature;
  TestOp op;
  int distance;
  std::uint32_t v1;
  std::uint32_t v2;
};

inline PackedCond unpack_cond(std::uint64_t w) {
  PackedCond c;
  c.feature = FeatureKind(unsigned(w >> 61));
  c.op = TestOp(unsigned((w >> 59) & 0x3));
  c.distance = int((w >> 52) & 0x7f) - 64;
  c.v1 = std::uint32_t((w >> 26) & kPackedNil);
  c.v2 = std::uint32_t(w & kPackedNil);
  return c;
}

// Open-addressing candidate table with an insertion-order arena, so
// iteration order is deterministic and inserts are allocation-free.
// Record layout in the arena: header word, then cnt condition words.
// Header: [tmpl:32][cnt:8][tag:16].
class CandTable {
 public:
  void reset(std::size_t expected) {
    arena_.clear();
    count_ = 0;
    std::size_t cap = 64;
    while (cap < expected * 2) cap <<= 1;
    slots_.assign(cap, 0);
    mask_ = cap - 1;
  }

  std::size_t size() const { return count_; }

  // Returns true when the candidate is new. Keeps the smallest template
  // index for duplicates.
  bool insert(std::uint32_t tag, const std::uint64_t* conds, unsigned cnt,
              std::uint32_t tmpl) {
    std::uint64_t h = fnv1a_u64(tag);
    for (unsigned i = 0; i < cnt; ++i) h = fnv1a_u64(conds[i], h);
    std::size_t slot = h & mask_;
    while (true) {
      std::uint32_t off = slots_[slot];
      if (off == 0) break;
      const std::uint64_t* rec = arena_.data() + (off - 1);
      const std::uint64_t header = rec[0];
      if ((header & 0xffff) == tag && ((header >> 16) & 0xff) == cnt &&
          std::equal(conds, conds + cnt, rec + 1)) {
        const std::uint32_t old_tmpl = std::uint32_t(header >> 24);
        if (tmpl < old_tmpl)
          arena_[off - 1] = make_header(tag, cnt, tmpl);
        return false;
      }
      slot = (slot + 1) & mask_;
    }
    const std::uint32_t off = std::uint32_t(arena_.size() + 1);
    arena_.push_back(make_header(tag, cnt, tmpl));
    arena_.insert(arena_.end(), conds, conds + cnt);
    slots_[slot] = off;
    ++count_;
    if (count_ * 10 > mask_ * 7) grow();
    return true;
  }

  struct View {
    std::uint32_t tag;
    unsigned cnt;
    std::uint32_t tmpl;
    const std::uint64_t* conds;
  };

  template <class F>
  void for_each(F&& f) const {
    std::size_t i = 0;
    while (i < arena_.size()) {
      const std::uint64_t header = arena_[i];
      View v;
      v.tag = std::uint32_t(header & 0xffff);
      v.cnt = unsigned((header >> 16) & 0xff);
      v.tmpl = std::uint32_t(header >> 24);
      v.conds = arena_.data() + i + 1;
      f(v);
      i += 1 + v.cnt;
    }
  }

 private:
  static std::uint64_t make_header(std::uint32_t tag, unsigned cnt,
                                   std::uint32_t tmpl) {
    return (std::uint64_t(tmpl) << 24) | (std::uint64_t(cnt & 0xff) << 16) |
           std::uint64_t(tag & 0xffff);
  }

  void grow() {
    std::size_t cap = (mask_ + 1) << 1;
    std::vector<std::uint32_t> fresh(cap, 0);
    const std::uint64_t new_mask = cap - 1;
    std::size_t i = 0;
    while (i < arena_.size()) {
      const std::uint64_t header = arena_[i];
      const unsigned cnt = unsigned((header >> 16) & 0xff);
      std::uint64_t h = fnv1a_u64(std::uint32_t(header & 0xffff));
      for (unsigned k = 0; k < cnt; ++k) h = fnv1a_u64(arena_[i + 1 + k], h);
      std::size_t slot = h & new_mask;
      while (fresh[slot] != 0) slot = (slot + 1) & new_mask;
      fresh[slot] = std::uint32_t(i + 1);
      i += 1 + cnt;
    }
    slots_.swap(fresh);
    mask_ = new_mask;
  }

  std::vector<std::uint64_t> arena_;
  std::vector<std::uint32_t> slots_;
  std::uint64_t mask_ = 63;
  std::size_t count_ = 0;
};

class Engine {
 public:
  enum class Mode { Standard, MonteCarlo };

  static constexpr std::uint32_t kTagDummy = 0;
  static constexpr std::uint32_t kTagNone = 1;
  static constexpr std::uint32_t kSpkNone = 0;
  static constexpr unsigned kMaxConds = 24;

  Engine(const Corpus& corpus, const std::vector<Template>& templates,
         const CuePatternSet& cues)
      : corpus_(corpus) {
    if (!corpus.fully_tagged())
      throw DataError("training corpus has untagged utterances");
    build_symbols(corpus, cues);
    build_positions(corpus, cues);
    build_templates(templates);
    weights_.assign(std::size_t(n_), 1);
  }

  // Weights aligned to flat position order (dialogues in corpus order).
  void set_weights(std::vector<std::uint64_t> w) {
    if (w.size() != std::size_t(n_))
      throw DataError("weights do not cover every training utterance");
    for (auto v : w)
      if (v == 0) throw DataError("weights must be >= 1");
    weights_ = std::move(w);
  }

  int positions() const { return n_; }

  RuleSequence train(Mode mode, long long threshold, int R,
                     std::uint64_t seed, const TrainOptions& opts) {
    if (threshold < 1) throw DataError("threshold must be >= 1");
    if (mode == Mode::MonteCarlo && R < 1)
      throw DataError("Monte Carlo R must be >= 1");

    // step 1: dummy initialization makes every tag incorrect
    std::fill(work_.begin(), work_.end(), std::int32_t(kTagDummy));
    correct_w_ = 0;
    correct_u_ = 0;

    RuleSequence model;
    model.threshold = threshold;
    model.config_hash = opts.config_hash;
    std::uint64_t generated_total = 0;

    while (true) {
      model.passes += 1;
      rebuild_tag_postings();
      incorrect_.clear();
      for (std::int32_t k = 0; k < n_; ++k)
        if (work_[std::size_t(k)] != gold_[std::size_t(k)])
          incorrect_.push_back(k);

      PassStats pass;
      pass.incorrect = incorrect_.size();
      table_.reset(std::max<std::size_t>(1024, last_unique_));

      if (!incorrect_.empty()) {
        if (mode == Mode::Standard) {
          generate_all(pass, generated_total, opts.budget, model.passes,
                       opts.stats);
        } else {
          sample_all(pass, R, seed, model.passes);
        }
      }
      generated_total += pass.generated;
      pass.unique = table_.size();
      last_unique_ = std::max<std::size_t>(64, table_.size());
      if (opts.stats) opts.stats->passes.push_back(pass);

      Best best = select_best();
      if (!best.valid || best.score < threshold) break;

      const long long before_w = correct_w_;
      const std::uint64_t fired = apply_packed(best.tag, best.conds);
      if (correct_w_ - before_w != best.score)
        throw InternalError(
            "emitted improvement does not match realized change: " +
            std::to_string(best.score) + " vs " +
            std::to_string(correct_w_ - before_w));
      if (opts.stats) {
        EmissionStats em;
        em.score = best.score;
        em.correct_before = before_w;
        em.correct_after = correct_w_;
        em.fired = fired;
        opts.stats->emissions.push_back(em);
      }
      TrainedRule tr;
      tr.rule = uncompile(best.tag, best.conds);
      tr.improvement = best.score;
      model.rules.push_back(std::move(tr));
    }
    if (opts.stats) opts.stats->rules_generated += generated_total;
    return model;
  }

  // Final working tags as tag names, flat order. The trainer's end state
  // equals self-application of the emitted model.
  std::vector<std::string> working_tags() const {
    std::vector<std::string> out;
    out.reserve(std::size_t(n_));
    for (auto t : work_) out.push_back(tag_names_[std::size_t(t)]);
    return out;
  }

 private:
  // --- construction ---------------------------------------------------

  void build_symbols(const Corpus& corpus, const CuePatternSet& cues) {
    tag_names_ = {kDummyTag, kNoneTag};
    for (const auto& t : corpus.tagset) tag_names_.push_back(t);
    for (std::size_t i = 0; i < tag_names_.size(); ++i)
      tag_id_[tag_names_[i]] = std::int32_t(i);

    std::set<std::string> speakers;
    for (const auto& d : corpus.dialogues)
      for (const auto& u : d.utterances) speakers.insert(u.speaker);
    spk_names_ = {kNoneTag};
    for (const auto& s : speakers) spk_names_.push_back(s);
    for (std::size_t i = 0; i < spk_names_.size(); ++i)
      spk_id_[spk_names_[i]] = std::int32_t(i);

    patterns_.clear();
    for (const auto& p : cues.patterns) patterns_.push_back(p.tokens);
    // CuePatternSet keeps patterns sorted and distinct; ids follow that order
  }

  void build_positions(const Corpus& corpus, const CuePatternSet& cues) {
    (void)cues;
    n_ = 0;
    for (const auto& d : corpus.dialogues)
      n_ += std::int32_t(d.utterances.size());
    dlg_of_.resize(std::size_t(n_));
    len_.resize(std::size_t(n_));
    spk_.resize(std::size_t(n_));
    spchg_.resize(std::size_t(n_));
    gold_.resize(std::size_t(n_));
    work_.assign(std::size_t(n_), std::int32_t(kTagDummy));
    cue_match_.resize(std::size_t(n_));

    std::int32_t k = 0;
    for (std::size_t di = 0; di < corpus.dialogues.size(); ++di) {
      const Dialogue& d = corpus.dialogues[di];
      for (std::size_t ui = 0; ui < d.utterances.size(); ++ui, ++k) {
        const Utterance& u = d.utterances[ui];
        dlg_of_[std::size_t(k)] = std::int32_t(di);
        len_[std::size_t(k)] = std::int32_t(u.tokens.size());
        spk_[std::size_t(k)] = spk_id_.at(u.speaker);
        spchg_[std::size_t(k)] =
            ui == 0 ? 1
                    : std::uint8_t(u.speaker != d.utterances[ui - 1].speaker);
        gold_[std::size_t(k)] = tag_id_.at(u.gold_tag);
        auto& matches = cue_match_[std::size_t(k)];
        for (std::size_t p = 0; p < patterns_.size(); ++p)
          if (pattern_occurs(patterns_[p], u.tokens))
            matches.push_back(std::int32_t(p));
      }
    }

    // static postings
    spk_pos_.assign(spk_names_.size(), {});
    spchg_pos_[0].clear();
    spchg_pos_[1].clear();
    cue_pos_.assign(patterns_.size(), {});
    len_pos_.clear();
    for (std::int32_t i = 0; i < n_; ++i) {
      spk_pos_[std::size_t(spk_[std::size_t(i)])].push_back(i);
      spchg_pos_[spchg_[std::size_t(i)]].push_back(i);
      len_pos_[len_[std::size_t(i)]].push_back(i);
      for (auto p : cue_match_[std::size_t(i)])
        cue_pos_[std::size_t(p)].push_back(i);
    }
    stamp_.assign(std::size_t(n_), 0);
    epoch_ = 0;
  }

  void build_templates(const std::vector<Template>& templates) {
    if (templates.empty()) throw DataError("no templates given");
    templates_.clear();
    conds_.clear();
    std::map<Condition, int> cond_idx;
    for (const auto& t : templates) {
      CTemplate ct;
      std::set<Condition> seen;
      for (const auto& c : t.conditions) {
        validate_condition(c);
        if (!seen.insert(c).second)
          throw DataError("template has duplicate condition " + to_string(c));
        auto it = cond_idx.find(c);
        if (it == cond_idx.end()) {
          it = cond_idx.emplace(c, int(conds_.size())).first;
          conds_.push_back(c);
        }
        ct.conds.push_back(it->second);
      }
      if (ct.conds.size() > kMaxConds)
        throw DataError("template exceeds supported condition count");
      templates_.push_back(std::move(ct));
    }
  }

  // --- per-position observation ----------------------------------------

  // Flat context index, or -1 when the distance leaves the dialogue.
  std::int32_t context(std::int32_t k, int distance) const {
    const std::int32_t t = k + distance;
    if (t < 0 || t >= n_) return -1;
    if (dlg_of_[std::size_t(t)] != dlg_of_[std::size_t(k)]) return -1;
    return t;
  }

  // Options a condition can instantiate to at position k, as packed words.
  // Order is deterministic and mirrors the public instantiation order.
  void condition_options(int cond_index, std::int32_t k,
                         std::vector<std::uint64_t>& out) const {
    out.clear();
    const Condition& c = conds_[std::size_t(cond_index)];
    const std::int32_t t = context(k, c.distance);
    switch (c.feature) {
      case FeatureKind::Length: {
        const std::int32_t len = t < 0 ? 0 : len_[std::size_t(t)];
        out.push_back(pack_cond(c.feature, TestOp::Equals, c.distance,
                                std::uint32_t(len)));
        out.push_back(pack_cond(c.feature, TestOp::LessThan, c.distance,
                                std::uint32_t(len + 1)));
        break;
      }
      case FeatureKind::Speaker: {
        const std::uint32_t v =
            t < 0 ? kSpkNone : std::uint32_t(spk_[std::size_t(t)]);
        out.push_back(pack_cond(c.feature, TestOp::Equals, c.distance, v));
        break;
      }
      case FeatureKind::SpeakerChange: {
        const std::uint32_t v = t < 0 ? 0 : spchg_[std::size_t(t)];
        out.push_back(pack_cond(c.feature, TestOp::Equals, c.distance, v));
        break;
      }
      case FeatureKind::Tag: {
        const std::uint32_t v =
            t < 0 ? kTagNone : std::uint32_t(work_[std::size_t(t)]);
        out.push_back(pack_cond(c.feature, TestOp::Equals, c.distance, v));
        break;
      }
      case FeatureKind::Cue: {
        if (t < 0) break;
        const auto& m = cue_match_[std::size_t(t)];
        for (auto p : m)
          out.push_back(pack_cond(c.feature, TestOp::Includes, c.distance,
                                  std::uint32_t(p)));
        for (std::size_t i = 0; i < m.size(); ++i)
          for (std::size_t j = i + 1; j < m.size(); ++j)
            out.push_back(pack_cond(c.feature, TestOp::Includes, c.distance,
                                    std::uint32_t(m[i]),
                                    std::uint32_t(m[j])));
        break;
      }
    }
  }

  std::uint64_t option_count(int cond_index, std::int32_t k) const {
    const Condition& c = conds_[std::size_t(cond_index)];
    const std::int32_t t = context(k, c.distance);
    switch (c.feature) {
      case FeatureKind::Length: return 2;
      case FeatureKind::Speaker:
      case FeatureKind::SpeakerChange:
      case FeatureKind::Tag: return 1;
      case FeatureKind::Cue: {
        if (t < 0) return 0;
        const std::uint64_t c2 = cue_match_[std::size_t(t)].size();
        return c2 + c2 * (c2 - 1) / 2;
      }
    }
    return 0;
  }

  // The i-th option in condition_options order, computed without
  // materializing the list (used by the Monte Carlo sampler).
  std::uint64_t option_at(int cond_index, std::int32_t k,
                          std::uint64_t idx) const {
    const Condition& c = conds_[std::size_t(cond_index)];
    const std::int32_t t = context(k, c.distance);
    switch (c.feature) {
      case FeatureKind::Length: {
        const std::int32_t len = t < 0 ? 0 : len_[std::size_t(t)];
        return idx == 0 ? pack_cond(c.feature, TestOp::Equals, c.distance,
                                    std::uint32_t(len))
                        : pack_cond(c.feature, TestOp::LessThan, c.distance,
                                    std::uint32_t(len + 1));
      }
      case FeatureKind::Speaker:
        return pack_cond(
            c.feature, TestOp::Equals, c.distance,
            t < 0 ? kSpkNone : std::uint32_t(spk_[std::size_t(t)]));
      case FeatureKind::SpeakerChange:
        return pack_cond(c.feature, TestOp::Equals, c.distance,
                         t < 0 ? 0 : spchg_[std::size_t(t)]);
      case FeatureKind::Tag:
        return pack_cond(
            c.feature, TestOp::Equals, c.distance,
            t < 0 ? kTagNone : std::uint32_t(work_[std::size_t(t)]));
      case FeatureKind::Cue: {
        const auto& m = cue_match_[std::size_t(t)];
        const std::uint64_t singles = m.size();
        if (idx < singles)
          return pack_cond(c.feature, TestOp::Includes, c.distance,
                           std::uint32_t(m[std::size_t(idx)]));
        std::uint64_t r = idx - singles;
        for (std::size_t i = 0; i + 1 < m.size(); ++i) {
          const std::uint64_t span = m.size() - 1 - i;
          if (r < span)
            return pack_cond(c.feature, TestOp::Includes, c.distance,
                             std::uint32_t(m[i]),
                             std::uint32_t(m[i + 1 + std::size_t(r)]));
          r -= span;
        }
        throw InternalError("cue option index out of range");
      }
    }
    throw InternalError("bad feature");
  }

  // --- generation -------------------------------------------------------

  void generate_all(PassStats& pass, std::uint64_t generated_before,
                    std::uint64_t budget, int pass_index, TrainStats* stats) {
    (void)pass_index;
    (void)stats;
    std::vector<std::vector<std::uint64_t>> options(conds_.size());
    std::array<std::uint64_t, kMaxConds> chosen{};
    std::array<std::uint64_t, kMaxConds> sorted{};
    for (std::int32_t k : incorrect_) {
      for (std::size_t ci = 0; ci < conds_.size(); ++ci)
        condition_options(int(ci), k, options[ci]);
      const std::uint32_t target = std::uint32_t(gold_[std::size_t(k)]);
      for (std::size_t ti = 0; ti < templates_.size(); ++ti) {
        const CTemplate& t = templates_[ti];
        const unsigned cnt = unsigned(t.conds.size());
        bool feasible = true;
        for (int ci : t.conds) {
          if (options[std::size_t(ci)].empty()) {
            feasible = false;
            break;
          }
        }
        if (!feasible) continue;
        // odometer over the instantiation product
        std::array<std::size_t, kMaxConds> pick{};
        while (true) {
          for (unsigned i = 0; i < cnt; ++i)
            chosen[i] = options[std::size_t(t.conds[i])][pick[i]];
          std::copy(chosen.begin(), chosen.begin() + cnt, sorted.begin());
          std::sort(sorted.begin(), sorted.begin() + cnt);
          pass.generated += 1;
          table_.insert(target, sorted.data(), cnt, std::uint32_t(ti));
          if (budget && generated_before + pass.generated > budget)
            throw BudgetExceeded(generated_before + pass.generated, budget);
          unsigned i = cnt;
          while (i > 0) {
            if (++pick[i - 1] < options[std::size_t(t.conds[i - 1])].size())
              break;
            pick[i - 1] = 0;
            --i;
          }
          if (i == 0) break;
        }
      }
    }
  }

  void sample_all(PassStats& pass, int R, std::uint64_t seed,
                  int pass_index) {
    std::array<std::uint64_t, kMaxConds> sorted{};
    for (std::int32_t k : incorrect_) {
      SplitMix64 rng(derive_seed(seed, std::uint64_t(pass_index),
                                 std::uint64_t(std::uint32_t(k))));
      const std::uint32_t target = std::uint32_t(gold_[std::size_t(k)]);
      for (int r = 0; r < R; ++r) {
        const std::size_t ti = std::size_t(rng.below(templates_.size()));
        const CTemplate& t = templates_[ti];
        const unsigned cnt = unsigned(t.conds.size());
        bool ok = true;
        for (unsigned i = 0; i < cnt; ++i) {
          const std::uint64_t m = option_count(t.conds[i], k);
          if (m == 0) {
            ok = false;
            break;
          }
          sorted[i] = option_at(t.conds[i], k, rng.below(m));
        }
        if (!ok) continue;  // the drawn template has no firing instantiation
        std::sort(sorted.begin(), sorted.begin() + cnt);
        pass.generated += 1;
        table_.insert(target, sorted.data(), cnt, std::uint32_t(ti));
      }
    }
  }

  // --- scoring ----------------------------------------------------------

  void rebuild_tag_postings() {
    tag_pos_.assign(tag_names_.size(), {});
    for (std::int32_t i = 0; i < n_; ++i)
      tag_pos_[std::size_t(work_[std::size_t(i)])].push_back(i);
  }

  // Positions where the packed condition's feature value is observed,
  // before shifting by the distance. Returns nullptr when the condition has
  // no usable posting: length lt, dynamic tag reads, and any test matching
  // a sentinel value, because out-of-bounds anchors also satisfy those and
  // never appear in a posting.
  const std::vector<std::int32_t>* posting_for(const PackedCond& c) const {
    switch (c.feature) {
      case FeatureKind::Length: {
        if (c.op != TestOp::Equals || c.v1 == 0) return nullptr;
        auto it = len_pos_.find(std::int32_t(c.v1));
        return it == len_pos_.end() ? &empty_ : &it->second;
      }
      case FeatureKind::Speaker:
        if (c.v1 == kSpkNone) return nullptr;
        return c.v1 < spk_pos_.size() ? &spk_pos_[c.v1] : &empty_;
      case FeatureKind::SpeakerChange:
        if (c.v1 == 0) return nullptr;  // false also holds out of bounds
        return &spchg_pos_[1];
      case FeatureKind::Tag:
        if (c.distance < 0) return nullptr;  // live reads, not frozen
        if (c.v1 == kTagNone) return nullptr;
        return c.v1 < tag_pos_.size() ? &tag_pos_[c.v1] : &empty_;
      case FeatureKind::Cue: {
        if (c.v1 >= cue_pos_.size()) return &empty_;
        if (c.v2 != kPackedNil && c.v2 < cue_pos_.size() &&
            cue_pos_[c.v2].size() < cue_pos_[c.v1].size())
          return &cue_pos_[c.v2];
        return &cue_pos_[c.v1];
      }
    }
    return nullptr;
  }

  // Frozen-tag check of one packed condition at position k. Dynamic tag
  // reads must not take this path.
  bool holds_static(const PackedCond& c, std::int32_t k) const {
    const std::int32_t t = context(k, c.distance);
    switch (c.feature) {
      case FeatureKind::Length: {
        const std::int32_t len = t < 0 ? 0 : len_[std::size_t(t)];
        return c.op == TestOp::Equals ? std::uint32_t(len) == c.v1
                                      : len < std::int32_t(c.v1);
      }
      case FeatureKind::Speaker:
        return (t < 0 ? kSpkNone : std::uint32_t(spk_[std::size_t(t)])) ==
               c.v1;
      case FeatureKind::SpeakerChange:
        return (t < 0 ? 0u : std::uint32_t(spchg_[std::size_t(t)])) == c.v1;
      case FeatureKind::Tag:
        return (t < 0 ? kTagNone
                      : std::uint32_t(work_[std::size_t(t)])) == c.v1;
      case FeatureKind::Cue: {
        if (t < 0) return false;
        const auto& m = cue_match_[std::size_t(t)];
        if (!std::binary_search(m.begin(), m.end(), std::int32_t(c.v1)))
          return false;
        return c.v2 == kPackedNil ||
               std::binary_search(m.begin(), m.end(), std::int32_t(c.v2));
      }
    }
    return false;
  }

  // Live tag read during a sweep: positions this rule already rewrote in
  // the current epoch read the rule's new tag.
  std::uint32_t live_tag(std::int32_t t, std::uint32_t new_tag) const {
    if (stamp_[std::size_t(t)] == epoch_) return new_tag;
    return std::uint32_t(work_[std::size_t(t)]);
  }

  struct Walk {
    const std::vector<std::int32_t>* driver = nullptr;
    int shift = 0;  // k = base - shift? see below: k = base - distance
  };

  // Sweep-exact score of a candidate; does not modify anything. Uses the
  // smallest static posting as the driver and verifies the remaining
  // conditions per position; negative-distance tag conditions are evaluated
  // live against an overlay of this rule's own rewrites.
  long long score_candidate(const CandTable::View& cand) {
    PackedCond conds[kMaxConds];
    bool dynamic = false;
    for (unsigned i = 0; i < cand.cnt; ++i) {
      conds[i] = unpack_cond(cand.conds[i]);
      if (conds[i].feature == FeatureKind::Tag && conds[i].distance < 0)
        dynamic = true;
    }
    // driver selection: smallest posting wins; its condition is still
    // re-verified per anchor, which also covers cue pairs where the posting
    // only tracks one of the two patterns
    const std::vector<std::int32_t>* driver = nullptr;
    int driver_dist = 0;
    for (unsigned i = 0; i < cand.cnt; ++i) {
      const auto* p = posting_for(conds[i]);
      if (p && (!driver || p->size() < driver->size())) {
        driver = p;
        driver_dist = conds[i].distance;
      }
    }
    const std::uint32_t new_tag = cand.tag;
    ++epoch_;
    long long score = 0;
    auto visit = [&](std::int32_t k) {
      for (unsigned i = 0; i < cand.cnt; ++i) {
        const PackedCond& c = conds[i];
        if (c.feature == FeatureKind::Tag && c.distance < 0) {
          const std::int32_t t = context(k, c.distance);
          const std::uint32_t v = t < 0 ? kTagNone : live_tag(t, new_tag);
          if (v != c.v1) return;
        } else {
          if (!holds_static(c, k)) return;
        }
      }
      const std::int32_t w = work_[std::size_t(k)];
      const std::int32_t g = gold_[std::size_t(k)];
      if (std::uint32_t(w) == new_tag) return;  // no change, no mark
      if (w != g && std::int32_t(new_tag) == g)
        score += static_cast<long long>(weights_[std::size_t(k)]);
      else if (w == g && std::int32_t(new_tag) != g)
        score -= static_cast<long long>(weights_[std::size_t(k)]);
      if (dynamic) stamp_[std::size_t(k)] = epoch_;
    };
    if (driver) {
      // driver posting holds context positions; shift back to the anchor
      for (std::int32_t base : *driver) {
        const std::int32_t k = base - driver_dist;
        if (k < 0 || k >= n_) continue;
        if (dlg_of_[std::size_t(k)] != dlg_of_[std::size_t(base)]) continue;
        visit(k);
      }
    } else {
      for (std::int32_t k = 0; k < n_; ++k) visit(k);
    }
    return score;
  }

  // Applies a packed rule for real: rewrites working tags with the same
  // sweep order and firing decisions as score_candidate. Returns the number
  // of changed tags and updates the running correct counts.
  std::uint64_t apply_packed(std::uint32_t new_tag,
                             const std::vector<std::uint64_t>& cond_words) {
    PackedCond conds[kMaxConds];
    const unsigned cnt = unsigned(cond_words.size());
    for (unsigned i = 0; i < cnt; ++i) conds[i] = unpack_cond(cond_words[i]);
    const std::vector<std::int32_t>* driver = nullptr;
    int driver_dist = 0;
    for (unsigned i = 0; i < cnt; ++i) {
      const auto* p = posting_for(conds[i]);
      if (p && (!driver || p->size() < driver->size())) {
        driver = p;
        driver_dist = conds[i].distance;
      }
    }
    std::uint64_t changed = 0;
    auto visit = [&](std::int32_t k) {
      for (unsigned i = 0; i < cnt; ++i) {
        const PackedCond& c = conds[i];
        if (c.feature == FeatureKind::Tag && c.distance < 0) {
          const std::int32_t t = context(k, c.distance);
          const std::uint32_t v =
              t < 0 ? kTagNone : std::uint32_t(work_[std::size_t(t)]);
          if (v != c.v1) return;
        } else {
          if (!holds_static(c, k)) return;
        }
      }
      const std::int32_t w = work_[std::size_t(k)];
      if (std::uint32_t(w) == new_tag) return;
      const std::int32_t g = gold_[std::size_t(k)];
      if (w != g && std::int32_t(new_tag) == g) {
        correct_w_ += static_cast<long long>(weights_[std::size_t(k)]);
        correct_u_ += 1;
      } else if (w == g && std::int32_t(new_tag) != g) {
        correct_w_ -= static_cast<long long>(weights_[std::size_t(k)]);
        correct_u_ -= 1;
      }
      work_[std::size_t(k)] = std::int32_t(new_tag);
      ++changed;
    };
    if (driver) {
      // the driver posting is immutable during this sweep: tag postings are
      // only rebuilt between passes, and static postings never change
      for (std::int32_t base : *driver) {
        const std::int32_t k = base - driver_dist;
        if (k < 0 || k >= n_) continue;
        if (dlg_of_[std::size_t(k)] != dlg_of_[std::size_t(base)]) continue;
        visit(k);
      }
    } else {
      for (std::int32_t k = 0; k < n_; ++k) visit(k);
    }
    return changed;
  }

  // --- selection ----------------------------------------------------------

  struct Best {
    bool valid = false;
    long long score = 0;
    std::uint32_t tag = 0;
    unsigned cnt = 0;
    std::uint32_t tmpl = 0;
    std::vector<std::uint64_t> conds;
    std::string serialized;  // filled lazily for tie-breaking
  };

  Best select_best() {
    Best best;
    table_.for_each([&](const CandTable::View& cand) {
      const long long score = score_candidate(cand);
      if (best.valid) {
        if (score < best.score) return;
        if (score == best.score) {
          if (cand.cnt > best.cnt) return;
          if (cand.cnt == best.cnt) {
            if (cand.tmpl > best.tmpl) return;
            if (cand.tmpl == best.tmpl) {
              // full tie on (score, conditions, template): lexicographic
              // serialization decides
              if (best.serialized.empty())
                best.serialized = serialize_view(best.tag, best.conds.data(),
                                                 best.cnt);
              const std::string cur =
                  serialize_view(cand.tag, cand.conds, cand.cnt);
              if (cur >= best.serialized) return;
              best.serialized = cur;
              best.tag = cand.tag;
              best.cnt = cand.cnt;
              best.tmpl = cand.tmpl;
              best.conds.assign(cand.conds, cand.conds + cand.cnt);
              return;
            }
          }
        }
      }
      best.valid = true;
      best.score = score;
      best.tag = cand.tag;
      best.cnt = cand.cnt;
      best.tmpl = cand.tmpl;
      best.conds.assign(cand.conds, cand.conds + cand.cnt);
      best.serialized.clear();
    });
    return best;
  }

  // --- conversion back to the public form --------------------------------

  ConditionInstance uncompile_cond(const PackedCond& c) const {
    ConditionInstance inst;
    inst.cond.feature = c.feature;
    inst.cond.distance = c.distance;
    inst.op = c.op;
    switch (c.feature) {
      case FeatureKind::Length:
        inst.int_value = static_cast<long long>(c.v1);
        break;
      case FeatureKind::Speaker:
        inst.sym_value = spk_names_.at(c.v1);
        break;
      case FeatureKind::SpeakerChange:
        inst.bool_value = c.v1 != 0;
        break;
      case FeatureKind::Tag:
        inst.sym_value = tag_names_.at(c.v1);
        break;
      case FeatureKind::Cue:
        inst.patterns.push_back(patterns_.at(c.v1));
        if (c.v2 != kPackedNil) inst.patterns.push_back(patterns_.at(c.v2));
        std::sort(inst.patterns.begin(), inst.patterns.end());
        break;
    }
    return inst;
  }

  Rule uncompile(std::uint32_t tag,
                 const std::vector<std::uint64_t>& conds) const {
    Rule r;
    r.new_tag = tag_names_.at(tag);
    for (auto w : conds) r.antecedent.push_back(uncompile_cond(unpack_cond(w)));
    r.canonicalize();
    return r;
  }

  std::string serialize_view(std::uint32_t tag, const std::uint64_t* conds,
                             unsigned cnt) const {
    std::vector<std::uint64_t> v(conds, conds + cnt);
    return rule_sort_key(uncompile(tag, v));
  }

  // --- data ---------------------------------------------------------------

  const Corpus& corpus_;
  std::int32_t n_ = 0;
  std::vector<std::int32_t> dlg_of_, len_, spk_, gold_, work_;
  std::vector<std::uint8_t> spchg_;
  std::vector<std::vector<std::int32_t>> cue_match_;
  std::vector<std::uint64_t> weights_;

  std::vector<std::string> tag_names_;
  std::map<std::string, std::int32_t> tag_id_;
  std::vector<std::string> spk_names_;
  std::map<std::string, std::int32_t> spk_id_;
  std::vector<std::vector<std::string>> patterns_;

  struct CTemplate {
    std::vector<int> conds;
  };
  std::vector<Condition> conds_;
  std::vector<CTemplate> templates_;

  std::map<std::int32_t, std::vector<std::int32_t>> len_pos_;
  std::vector<std::vector<std::int32_t>> spk_pos_;
  std::array<std::vector<std::int32_t>, 2> spchg_pos_;
  std::vector<std::vector<std::int32_t>> cue_pos_;
  std::vector<std::vector<std::int32_t>> tag_pos_;
  inline static const std::vector<std::int32_t> empty_{};

  std::vector<std::int32_t> incorrect_;
  CandTable table_;
  std::size_t last_unique_ = 64;
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;

  long long correct_w_ = 0;
  long long correct_u_ = 0;
};

}  // namespace tbltag::detail
