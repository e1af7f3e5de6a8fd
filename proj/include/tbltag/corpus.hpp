#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tbltag/errors.hpp"
#include "tbltag/hash.hpp"
#include "tbltag/rng.hpp"
#include "tbltag/text.hpp"

namespace tbltag {

// Reserved sentinel labels. DUMMY is the initialization label that makes
// every instance incorrect at the start of training; NONE is the virtual
// tag/speaker observed at out-of-bounds context distances. Neither may
// appear as a domain tag in a corpus.
inline const std::string kDummyTag = "DUMMY";
inline const std::string kNoneTag = "NONE";

inline bool is_reserved_tag(const std::string& t) {
  return t == kDummyTag || t == kNoneTag;
}

struct Utterance {
  std::string dialogue_id;
  int position = 0;
  std::string speaker;
  std::vector<std::string> tokens;
  std::string gold_tag;                // empty = untagged application data
  std::string working_tag = kDummyTag;

  bool tagged() const { return !gold_tag.empty(); }
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;
};

struct Corpus {
  std::vector<Dialogue> dialogues;
  std::set<std::string> tagset;  // domain tags only; sentinels excluded

  std::size_t utterance_count() const {
    std::size_t n = 0;
    for (const auto& d : dialogues) n += d.utterances.size();
    return n;
  }

  bool fully_tagged() const {
    for (const auto& d : dialogues)
      for (const auto& u : d.utterances)
        if (!u.tagged()) return false;
    return true;
  }

  // Structural invariants: contiguous positions, non-empty dialogues and
  // token lists, tags drawn from the tagset.
  void validate() const {
    std::set<std::string> seen_ids;
    for (const auto& d : dialogues) {
      if (d.utterances.empty())
        throw DataError("dialogue '" + d.id + "' has zero utterances");
      if (!seen_ids.insert(d.id).second)
        throw DataError("duplicate dialogue id '" + d.id + "'");
      for (std::size_t i = 0; i < d.utterances.size(); ++i) {
        const Utterance& u = d.utterances[i];
        if (u.dialogue_id != d.id)
          throw DataError("utterance dialogue id mismatch in '" + d.id + "'");
        if (u.position != static_cast<int>(i))
          throw DataError("non-contiguous positions in dialogue '" + d.id +
                          "'");
        if (u.tokens.empty())
          throw DataError("empty token list in dialogue '" + d.id + "' at " +
                          std::to_string(i));
        if (is_reserved_tag(u.speaker))
          throw DataError("speaker '" + u.speaker + "' is reserved");
        if (u.tagged() && !tagset.count(u.gold_tag))
          throw DataError("gold tag '" + u.gold_tag + "' not in tagset");
        if (u.working_tag != kDummyTag && !tagset.count(u.working_tag))
          throw DataError("working tag '" + u.working_tag +
                          "' not in tagset");
      }
    }
  }
};

// --- .dacts format -------------------------------------------------------
//
// One utterance per line:
//   dialogue_id <TAB> position <TAB> speaker <TAB> tag_or_dash <TAB> raw_text
// '#' starts a comment line, blank lines are ignored, and a dialogue's lines
// must form one contiguous block.

namespace detail {

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return out;
}

}  // namespace detail

inline Corpus parse_corpus(std::istream& in, const std::string& format) {
  if (format != "dacts")
    throw DataError("unknown corpus format id '" + format + "'");
  Corpus corpus;
  std::set<std::string> finished_ids;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 5)
      throw ParseError("expected 5 tab-separated fields, got " +
                           std::to_string(fields.size()),
                       lineno);
    const std::string& did = fields[0];
    if (did.empty()) throw ParseError("empty dialogue id", lineno);
    int position = 0;
    try {
      std::size_t used = 0;
      position = std::stoi(fields[1], &used);
      if (used != fields[1].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw ParseError("bad position '" + fields[1] + "'", lineno);
    }
    const std::string& speaker = fields[2];
    if (speaker.empty() ||
        speaker.find_first_of(" \t;\"") != std::string::npos)
      throw ParseError("bad speaker '" + speaker + "'", lineno);
    if (is_reserved_tag(speaker))
      throw ParseError("speaker '" + speaker + "' is reserved", lineno);
    const std::string& tag = fields[3];
    if (tag.empty()) throw ParseError("empty tag column (use '-')", lineno);
    if (tag != "-" && tag.find_first_of(" \t;\"") != std::string::npos)
      throw ParseError("bad tag '" + tag + "'", lineno);
    if (is_reserved_tag(tag))
      throw ParseError("tag '" + tag + "' is reserved", lineno);

    if (corpus.dialogues.empty() || corpus.dialogues.back().id != did) {
      if (finished_ids.count(did))
        throw ParseError("dialogue '" + did + "' is not contiguous", lineno);
      if (!corpus.dialogues.empty())
        finished_ids.insert(corpus.dialogues.back().id);
      corpus.dialogues.push_back(Dialogue{did, {}});
    }
    Dialogue& dlg = corpus.dialogues.back();
    if (position != static_cast<int>(dlg.utterances.size()))
      throw ParseError("expected position " +
                           std::to_string(dlg.utterances.size()) + ", got " +
                           std::to_string(position),
                       lineno);
    Utterance u;
    u.dialogue_id = did;
    u.position = position;
    u.speaker = speaker;
    u.tokens = tokenize(fields[4]);
    if (u.tokens.empty()) throw ParseError("utterance with no tokens", lineno);
    if (tag != "-") {
      u.gold_tag = tag;
      u.working_tag = tag;
      corpus.tagset.insert(tag);
    } else {
      u.working_tag = kDummyTag;
    }
    dlg.utterances.push_back(std::move(u));
  }
  corpus.validate();
  return corpus;
}

// Canonical serialization: tokens joined by single spaces, gold tag or '-'.
// parse -> serialize -> parse is a fixed point.
inline void serialize_corpus(const Corpus& corpus, std::ostream& out) {
  for (const auto& d : corpus.dialogues) {
    for (const auto& u : d.utterances) {
      out << d.id << '\t' << u.position << '\t' << u.speaker << '\t'
          << (u.tagged() ? u.gold_tag : std::string("-")) << '\t'
          << join(u.tokens) << '\n';
    }
  }
}

inline Corpus parse_corpus_string(const std::string& text,
                                  const std::string& format = "dacts") {
  std::istringstream in(text);
  return parse_corpus(in, format);
}

inline std::string serialize_corpus_string(const Corpus& corpus) {
  std::ostringstream out;
  serialize_corpus(corpus, out);
  return out.str();
}

inline Corpus load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file: " + path);
  return parse_corpus(in, "dacts");
}

// --- splitting and initialization ---------------------------------------

// Splits by whole dialogues, never within one. Returns (train, test) where
// test contains exactly the listed dialogues; relative order is preserved.
inline std::pair<Corpus, Corpus> split_corpus(
    const Corpus& corpus, const std::set<std::string>& test_dialogue_ids) {
  std::set<std::string> known;
  for (const auto& d : corpus.dialogues) known.insert(d.id);
  for (const auto& id : test_dialogue_ids)
    if (!known.count(id)) throw DataError("unknown dialogue id '" + id + "'");
  Corpus train, test;
  for (const auto& d : corpus.dialogues) {
    (test_dialogue_ids.count(d.id) ? test : train).dialogues.push_back(d);
  }
  auto rebuild_tagset = [](Corpus& c) {
    c.tagset.clear();
    for (const auto& d : c.dialogues)
      for (const auto& u : d.utterances)
        if (u.tagged()) c.tagset.insert(u.gold_tag);
  };
  rebuild_tagset(train);
  rebuild_tagset(test);
  return {std::move(train), std::move(test)};
}

// Training step 1: label every instance with the dummy tag so that all
// instances are incorrect and contribute to learning. Gold tags untouched.
inline Corpus initialize_dummy(Corpus corpus) {
  for (auto& d : corpus.dialogues)
    for (auto& u : d.utterances) u.working_tag = kDummyTag;
  return corpus;
}

// Hash over the static structure of a corpus (ids, positions, speakers,
// tokens) ignoring tags, so tagged and untagged variants of the same text
// compare equal. Used by eval to detect misaligned model/corpus pairs.
inline std::uint64_t corpus_structure_hash(const Corpus& corpus) {
  std::uint64_t h = kFnvOffset;
  for (const auto& d : corpus.dialogues) {
    h = fnv1a(d.id, h);
    h = fnv1a("\x1f", h);
    for (const auto& u : d.utterances) {
      h = fnv1a(u.speaker, h);
      h = fnv1a("\x1e", h);
      for (const auto& t : u.tokens) {
        h = fnv1a(t, h);
        h = fnv1a("\x1d", h);
      }
    }
  }
  return h;
}

// --- synthetic corpus generation -----------------------------------------
//
// Replaces the unavailable appointment-scheduling corpus for desk-scale
// experiments: tags evolve by a bigram transition table, each utterance
// carries one cue word of its tag plus filler words, and a configurable
// noise rate emits a uniformly random tag with mismatched vocabulary.

struct GeneratorConfig {
  std::vector<std::string> tags;
  std::map<std::string, std::vector<std::string>> cues;  // per-tag cue words
  std::vector<std::string> fillers;
  // transition[from][to] = weight; missing rows/entries default to uniform
  std::map<std::string, std::map<std::string, double>> transition;
  std::vector<std::string> speakers = {"a", "b"};
  int dialogues = 100;
  int utterances_min = 8;
  int utterances_max = 16;
  int tokens_min = 3;
  int tokens_max = 9;
  double noise = 0.0;
  double speaker_change_prob = 0.7;
  double cue_prob = 1.0;  // chance an utterance carries a cue of its tag

  void validate() const {
    if (tags.empty()) throw DataError("generator: empty tagset");
    if (noise < 0.0 || noise > 1.0)
      throw DataError("generator: noise rate outside [0,1]");
    if (cue_prob < 0.0 || cue_prob > 1.0)
      throw DataError("generator: cue_prob outside [0,1]");
    if (dialogues <= 0) throw DataError("generator: dialogues must be > 0");
    if (utterances_min <= 0 || utterances_max < utterances_min)
      throw DataError("generator: bad utterance count range");
    if (tokens_min <= 0 || tokens_max < tokens_min)
      throw DataError("generator: bad token count range");
    if (speakers.empty()) throw DataError("generator: no speakers");
    for (const auto& t : tags)
      if (is_reserved_tag(t))
        throw DataError("generator: tag '" + t + "' is reserved");
    for (const auto& [tag, words] : cues) {
      (void)words;
      if (std::find(tags.begin(), tags.end(), tag) == tags.end())
        throw DataError("generator: cue list for unknown tag '" + tag + "'");
    }
    for (const auto& [from, row] : transition) {
      if (std::find(tags.begin(), tags.end(), from) == tags.end())
        throw DataError("generator: transition row for unknown tag '" + from +
                        "'");
      double total = 0.0;
      for (const auto& [to, w] : row) {
        if (std::find(tags.begin(), tags.end(), to) == tags.end())
          throw DataError("generator: transition to unknown tag '" + to +
                          "'");
        if (w < 0.0) throw DataError("generator: negative transition weight");
        total += w;
      }
      if (total <= 0.0)
        throw DataError("generator: transition row '" + from +
                        "' has zero mass");
    }
  }

  // Row-stochastic transition matrix in tag order; uniform where unspecified.
  std::vector<std::vector<double>> matrix() const {
    const std::size_t n = tags.size();
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      auto it = transition.find(tags[i]);
      if (it == transition.end() || it->second.empty()) {
        for (std::size_t j = 0; j < n; ++j) m[i][j] = 1.0 / double(n);
        continue;
      }
      double total = 0.0;
      for (const auto& [to, w] : it->second) {
        (void)to;
        total += w;
      }
      for (std::size_t j = 0; j < n; ++j) {
        auto jt = it->second.find(tags[j]);
        m[i][j] = (jt == it->second.end()) ? 0.0 : jt->second / total;
      }
    }
    return m;
  }

  // Stationary distribution of the transition matrix by power iteration.
  std::vector<double> stationary(int iterations = 200) const {
    const std::size_t n = tags.size();
    auto m = matrix();
    std::vector<double> p(n, 1.0 / double(n)), q(n);
    for (int it = 0; it < iterations; ++it) {
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) q[j] += p[i] * m[i][j];
      double total = 0.0;
      for (double v : q) total += v;
      for (double& v : q) v /= total;
      p.swap(q);
    }
    return p;
  }

  std::string canonical() const {
    std::ostringstream os;
    os << "cue_prob=" << cue_prob << "\n";
    os << "dialogues=" << dialogues << "\n";
    os << "fillers=" << join(fillers) << "\n";
    os << "noise=" << noise << "\n";
    os << "speaker_change_prob=" << speaker_change_prob << "\n";
    os << "speakers=" << join(speakers) << "\n";
    os << "tags=" << join(tags) << "\n";
    os << "tokens=" << tokens_min << ".." << tokens_max << "\n";
    os << "utterances=" << utterances_min << ".." << utterances_max << "\n";
    for (const auto& [tag, words] : cues)
      os << "cue." << tag << "=" << join(words) << "\n";
    for (const auto& [from, row] : transition) {
      os << "transition." << from << "=";
      bool first = true;
      for (const auto& [to, w] : row) {
        if (!first) os << " ";
        os << to << ":" << w;
        first = false;
      }
      os << "\n";
    }
    return os.str();
  }

  std::uint64_t hash() const { return config_hash(canonical()); }

  static GeneratorConfig parse(std::istream& in);
  static GeneratorConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open generator config: " + path);
    return parse(in);
  }
};

namespace detail {

inline std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string w;
  while (is >> w) out.push_back(w);
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace detail

// Flat key = value config, one entry per line. Per-tag keys use dotted
// suffixes: cue.TAG = words..., transition.TAG = TO:weight ...
inline GeneratorConfig GeneratorConfig::parse(std::istream& in) {
  GeneratorConfig cfg;
  cfg.speakers.clear();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError("expected key = value", lineno);
    std::string key = detail::trim(t.substr(0, eq));
    std::string value = detail::trim(t.substr(eq + 1));
    try {
      if (key == "tags") {
        cfg.tags = detail::split_spaces(value);
      } else if (key == "fillers") {
        cfg.fillers = detail::split_spaces(value);
      } else if (key == "speakers") {
        cfg.speakers = detail::split_spaces(value);
      } else if (key == "dialogues") {
        cfg.dialogues = std::stoi(value);
      } else if (key == "utterances_min") {
        cfg.utterances_min = std::stoi(value);
      } else if (key == "utterances_max") {
        cfg.utterances_max = std::stoi(value);
      } else if (key == "tokens_min") {
        cfg.tokens_min = std::stoi(value);
      } else if (key == "tokens_max") {
        cfg.tokens_max = std::stoi(value);
      } else if (key == "noise") {
        cfg.noise = std::stod(value);
      } else if (key == "cue_prob") {
        cfg.cue_prob = std::stod(value);
      } else if (key == "speaker_change_prob") {
        cfg.speaker_change_prob = std::stod(value);
      } else if (key.rfind("cue.", 0) == 0) {
        cfg.cues[key.substr(4)] = detail::split_spaces(value);
      } else if (key.rfind("transition.", 0) == 0) {
        std::map<std::string, double> row;
        for (const auto& entry : detail::split_spaces(value)) {
          std::size_t colon = entry.rfind(':');
          if (colon == std::string::npos)
            throw DataError("expected TO:weight entries");
          row[entry.substr(0, colon)] = std::stod(entry.substr(colon + 1));
        }
        cfg.transition[key.substr(11)] = std::move(row);
      } else {
        throw DataError("unknown key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(std::string(e.what()), lineno);
    }
  }
  if (cfg.speakers.empty()) cfg.speakers = {"a", "b"};
  cfg.validate();
  return cfg;
}

namespace detail {

inline std::size_t sample_index(const std::vector<double>& weights,
                                SplitMix64& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  double x = rng.unit() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (x < acc) return i;
  }
  return weights.size() - 1;
}

}  // namespace detail

// Deterministic for a fixed (config, seed). Dialogue tags follow the
// transition table starting from its stationary distribution; at the noise
// rate the emitted tag is uniform and the vocabulary is drawn from an
// independently chosen tag, so noisy instances carry no usable signal.
inline Corpus generate_synthetic_corpus(const GeneratorConfig& cfg,
                                        std::uint64_t seed) {
  cfg.validate();
  const std::size_t ntags = cfg.tags.size();
  const auto m = cfg.matrix();
  const auto pi = cfg.stationary();
  Corpus corpus;
  for (const auto& t : cfg.tags) corpus.tagset.insert(t);

  for (int d = 0; d < cfg.dialogues; ++d) {
    SplitMix64 rng(derive_seed(seed, 0x6469616cULL, std::uint64_t(d)));
    std::ostringstream id;
    id << "d" << (d + 1);
    Dialogue dlg{id.str(), {}};
    const int count =
        cfg.utterances_min +
        int(rng.below(std::uint64_t(cfg.utterances_max - cfg.utterances_min +
                                    1)));
    std::size_t chain = detail::sample_index(pi, rng);
    std::size_t speaker = rng.below(cfg.speakers.size());
    for (int u = 0; u < count; ++u) {
      if (u > 0) {
        chain = detail::sample_index(m[chain], rng);
        if (cfg.speakers.size() > 1 &&
            rng.bernoulli(cfg.speaker_change_prob)) {
          speaker = (speaker + 1 + rng.below(cfg.speakers.size() - 1)) %
                    cfg.speakers.size();
        }
      }
      std::size_t emitted = chain;
      std::size_t content = chain;
      if (cfg.noise > 0.0 && rng.bernoulli(cfg.noise)) {
        emitted = rng.below(ntags);
        content = rng.below(ntags);
        chain = emitted;
      }
      const int len =
          cfg.tokens_min +
          int(rng.below(std::uint64_t(cfg.tokens_max - cfg.tokens_min + 1)));
      std::vector<std::string> tokens;
      const auto cue_it = cfg.cues.find(cfg.tags[content]);
      if (cue_it != cfg.cues.end() && !cue_it->second.empty() &&
          (cfg.cue_prob >= 1.0 || rng.bernoulli(cfg.cue_prob))) {
        tokens.push_back(
            cue_it->second[rng.below(cue_it->second.size())]);
      }
      while (static_cast<int>(tokens.size()) < len) {
        if (cfg.fillers.empty()) {
          tokens.push_back("uh");
        } else {
          tokens.push_back(cfg.fillers[rng.below(cfg.fillers.size())]);
        }
      }
      // Fisher-Yates so the cue word lands anywhere in the utterance
      for (std::size_t i = tokens.size(); i > 1; --i) {
        std::swap(tokens[i - 1], tokens[rng.below(i)]);
      }
      Utterance utt;
      utt.dialogue_id = dlg.id;
      utt.position = u;
      utt.speaker = cfg.speakers[speaker];
      utt.tokens = std::move(tokens);
      utt.gold_tag = cfg.tags[emitted];
      utt.working_tag = utt.gold_tag;
      dlg.utterances.push_back(std::move(utt));
    }
    corpus.dialogues.push_back(std::move(dlg));
  }
  corpus.validate();
  return corpus;
}

}  // namespace tbltag
