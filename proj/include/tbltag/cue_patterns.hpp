#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "tbltag/corpus.hpp"
#include "tbltag/errors.hpp"

namespace tbltag {

// A token n-gram together with the dialogue-act distribution of the
// utterances containing it. Low entropy means the pattern is a strong cue
// for a few specific dialogue acts.
struct CuePattern {
  std::vector<std::string> tokens;
  std::uint64_t occurrence_count = 0;  // distinct containing utterances
  std::map<std::string, std::uint64_t> da_distribution;
  double entropy_bits = 0.0;

  bool operator<(const CuePattern& o) const { return tokens < o.tokens; }
  bool operator==(const CuePattern& o) const { return tokens == o.tokens; }
};

struct CuePatternSet {
  std::vector<CuePattern> patterns;  // sorted by token sequence, distinct
  std::uint64_t provenance = 0;      // hash of the producing config

  bool empty() const { return patterns.empty(); }
  std::size_t size() const { return patterns.size(); }

  bool contains(const std::vector<std::string>& tokens) const {
    CuePattern probe;
    probe.tokens = tokens;
    return std::binary_search(patterns.begin(), patterns.end(), probe);
  }
};

inline double distribution_entropy_bits(
    const std::map<std::string, std::uint64_t>& counts) {
  std::uint64_t total = 0;
  for (const auto& [tag, c] : counts) {
    (void)tag;
    total += c;
  }
  if (total == 0) return 0.0;
  double h = 0.0;
  for (const auto& [tag, c] : counts) {
    (void)tag;
    if (c == 0) continue;
    const double p = double(c) / double(total);
    h -= p * std::log2(p);
  }
  return h < 0.0 ? 0.0 : h;
}

// Does the pattern occur as a contiguous token subsequence?
inline bool pattern_occurs(const std::vector<std::string>& pattern,
                           const std::vector<std::string>& tokens) {
  if (pattern.empty() || pattern.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + pattern.size() <= tokens.size(); ++i) {
    if (std::equal(pattern.begin(), pattern.end(), tokens.begin() + i))
      return true;
  }
  return false;
}

// Every contiguous n-gram (1..max_len tokens) occurring in at least
// min_count distinct utterances, with its dialogue-act distribution counted
// once per containing utterance.
inline std::vector<CuePattern> extract_candidates(const Corpus& train,
                                                  int max_len,
                                                  int min_count) {
  if (max_len < 1) throw DataError("extract_candidates: max_len must be >= 1");
  if (min_count < 1)
    throw DataError("extract_candidates: min_count must be >= 1");
  if (!train.fully_tagged())
    throw DataError("extract_candidates: training corpus has untagged data");

  struct Counts {
    std::uint64_t total = 0;
    std::map<std::string, std::uint64_t> by_tag;
  };
  std::map<std::vector<std::string>, Counts> table;
  for (const auto& d : train.dialogues) {
    for (const auto& u : d.utterances) {
      std::set<std::vector<std::string>> seen;  // once per utterance
      const auto& toks = u.tokens;
      for (std::size_t start = 0; start < toks.size(); ++start) {
        for (std::size_t len = 1;
             len <= std::size_t(max_len) && start + len <= toks.size();
             ++len) {
          seen.insert(std::vector<std::string>(toks.begin() + start,
                                               toks.begin() + start + len));
        }
      }
      for (const auto& gram : seen) {
        auto& c = table[gram];
        c.total += 1;
        c.by_tag[u.gold_tag] += 1;
      }
    }
  }
  std::vector<CuePattern> out;
  for (auto& [gram, c] : table) {
    if (c.total < std::uint64_t(min_count)) continue;
    CuePattern p;
    p.tokens = gram;
    p.occurrence_count = c.total;
    p.da_distribution = std::move(c.by_tag);
    p.entropy_bits = distribution_entropy_bits(p.da_distribution);
    out.push_back(std::move(p));
  }
  return out;  // map iteration keeps this sorted by token sequence
}

// Keeps candidates with entropy <= entropy_max; top_k > 0 additionally keeps
// only the k lowest-entropy patterns (ties broken by higher occurrence
// count, then lexicographic tokens).
inline CuePatternSet select_cue_patterns(std::vector<CuePattern> candidates,
                                         double entropy_max,
                                         std::size_t top_k = 0) {
  if (entropy_max < 0.0)
    throw DataError("select_cue_patterns: entropy_max must be >= 0");
  std::vector<CuePattern> kept;
  for (auto& c : candidates) {
    if (c.entropy_bits <= entropy_max) kept.push_back(std::move(c));
  }
  if (top_k > 0 && kept.size() > top_k) {
    std::sort(kept.begin(), kept.end(),
              [](const CuePattern& a, const CuePattern& b) {
                if (a.entropy_bits != b.entropy_bits)
                  return a.entropy_bits < b.entropy_bits;
                if (a.occurrence_count != b.occurrence_count)
                  return a.occurrence_count > b.occurrence_count;
                return a.tokens < b.tokens;
              });
    kept.resize(top_k);
  }
  std::sort(kept.begin(), kept.end());
  CuePatternSet set;
  set.patterns = std::move(kept);
  return set;
}

// --- .cues format ---------------------------------------------------------
//
// One pattern per line, tokens space-separated; export adds entropy and
// count columns, import accepts bare pattern lines (static cue lists).

inline void save_cue_set(const CuePatternSet& set, std::ostream& out) {
  out << "# cues v1 " << hash_hex(set.provenance) << "\n";
  for (const auto& p : set.patterns) {
    out << join(p.tokens) << '\t';
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", p.entropy_bits);
    out << buf << '\t' << p.occurrence_count << '\n';
  }
}

inline CuePatternSet load_cue_set(std::istream& in) {
  CuePatternSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto fields = detail::split_tabs(line);
    CuePattern p;
    p.tokens = detail::split_spaces(lower_ascii(fields[0]));
    if (p.tokens.empty()) throw ParseError("empty cue pattern", lineno);
    try {
      if (fields.size() >= 2 && !fields[1].empty())
        p.entropy_bits = std::stod(fields[1]);
      if (fields.size() >= 3 && !fields[2].empty())
        p.occurrence_count = std::stoull(fields[2]);
    } catch (const std::exception&) {
      throw ParseError("bad entropy/count columns", lineno);
    }
    set.patterns.push_back(std::move(p));
  }
  std::sort(set.patterns.begin(), set.patterns.end());
  set.patterns.erase(std::unique(set.patterns.begin(), set.patterns.end()),
                     set.patterns.end());
  return set;
}

inline CuePatternSet load_cue_set_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open cue set file: " + path);
  return load_cue_set(in);
}

}  // namespace tbltag
