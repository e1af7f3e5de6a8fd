// tbltag: transformation-based dialogue-act tagger.
//
// Subcommands: extract-cues | train | tag | committee-train | committee-tag |
// eval | bench | synth. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 internal invariant violation. All randomness is seeded, so identical
// arguments and inputs produce byte-identical outputs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tbltag/tbltag.hpp"

namespace {

using namespace tbltag;

std::uint64_t file_content_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

// Canonical key=value lines -> config hash embedded in outputs.
struct ConfigLines {
  std::vector<std::string> lines;

  template <class T>
  void add(const std::string& key, const T& value) {
    std::ostringstream os;
    os << key << "=" << value;
    lines.push_back(os.str());
  }

  std::uint64_t hash() const {
    std::vector<std::string> sorted = lines;
    std::sort(sorted.begin(), sorted.end());
    std::string joined;
    for (const auto& l : sorted) {
      joined += l;
      joined += '\n';
    }
    return config_hash(joined);
  }
};

struct CueOptions {
  std::string cues_path;
  int max_len = 3;
  int min_count = 5;
  double entropy_max = 1.0;
  int top_k = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--cues", cues_path,
                    "cue set file (.cues); otherwise extracted from the "
                    "training corpus");
    cmd->add_option("--cue-max-len", max_len, "max cue pattern length");
    cmd->add_option("--cue-min-count", min_count,
                    "min distinct utterances containing a pattern");
    cmd->add_option("--cue-entropy-max", entropy_max,
                    "entropy ceiling in bits");
    cmd->add_option("--cue-top-k", top_k, "keep only the k lowest-entropy");
  }

  CuePatternSet resolve(const Corpus& train) const {
    if (!cues_path.empty()) return load_cue_set_file(cues_path);
    return select_cue_patterns(
        extract_candidates(train, max_len, min_count), entropy_max,
        std::size_t(std::max(0, top_k)));
  }

  void describe(ConfigLines& cfg) const {
    if (!cues_path.empty()) {
      cfg.add("cues_file_hash", hash_hex(file_content_hash(cues_path)));
    } else {
      cfg.add("cue_max_len", max_len);
      cfg.add("cue_min_count", min_count);
      cfg.add("cue_entropy_max", entropy_max);
      cfg.add("cue_top_k", top_k);
    }
  }
};

void write_tagged_dacts(const Corpus& corpus, std::uint64_t cfg_hash,
                        std::ostream& out) {
  out << "# tbltag tagged v1 config " << hash_hex(cfg_hash) << "\n";
  out << "# corpus " << hash_hex(corpus_structure_hash(corpus)) << "\n";
  for (const auto& d : corpus.dialogues)
    for (const auto& u : d.utterances) {
      // a surviving dummy tag means no rule fired; emit the untagged marker
      const std::string tag =
          u.working_tag == kDummyTag ? "-" : u.working_tag;
      out << d.id << '\t' << u.position << '\t' << u.speaker << '\t' << tag
          << '\t' << join(u.tokens) << '\n';
    }
}

void write_confidence_tsv(const std::vector<TagWithConfidence>& tags, int C,
                          int min_confidence, std::uint64_t cfg_hash,
                          std::uint64_t corpus_hash, std::ostream& out) {
  out << "# tbltag confidence v1 config " << hash_hex(cfg_hash) << "\n";
  out << "# corpus " << hash_hex(corpus_hash) << "\n";
  out << "# C " << C << " min_confidence " << min_confidence << "\n";
  out << "dialogue_id\tposition\ttag\tconfidence\tabstained\n";
  for (const auto& t : tags) {
    out << t.dialogue_id << '\t' << t.position << '\t' << t.tag << '\t'
        << t.confidence << '\t' << (t.confidence < min_confidence ? 1 : 0)
        << '\n';
  }
}

// Scans header comments of an output file for `# corpus <hex>`.
std::optional<std::uint64_t> stored_corpus_hash(const std::string& content) {
  std::istringstream in(content);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] != '#') break;
    std::istringstream ls(line);
    std::string hashmark, key, value;
    if (ls >> hashmark >> key >> value && key == "corpus")
      return std::stoull(value, nullptr, 16);
  }
  return std::nullopt;
}

int cmd_synth(const std::string& config_path, std::uint64_t seed,
              const std::string& out_path, int test_count,
              const std::string& train_out, const std::string& test_out) {
  GeneratorConfig cfg = GeneratorConfig::load(config_path);
  Corpus corpus = generate_synthetic_corpus(cfg, seed);
  ConfigLines cfg_lines;
  cfg_lines.add("command", "synth");
  cfg_lines.add("generator_hash", hash_hex(cfg.hash()));
  cfg_lines.add("seed", seed);
  const std::string stamp =
      "# tbltag corpus v1 config " + hash_hex(cfg_lines.hash()) + "\n";
  if (!out_path.empty()) {
    std::ostringstream os;
    serialize_corpus(corpus, os);
    write_file(out_path, stamp + os.str());
  }
  if (test_count > 0) {
    if (train_out.empty() || test_out.empty())
      throw DataError("--test-count needs --train-out and --test-out");
    if (test_count >= static_cast<int>(corpus.dialogues.size()))
      throw DataError("--test-count exceeds dialogue count");
    std::set<std::string> ids;
    for (std::size_t i = corpus.dialogues.size() - std::size_t(test_count);
         i < corpus.dialogues.size(); ++i)
      ids.insert(corpus.dialogues[i].id);
    auto [train, test] = split_corpus(corpus, ids);
    std::ostringstream a, b;
    serialize_corpus(train, a);
    serialize_corpus(test, b);
    write_file(train_out, stamp + a.str());
    write_file(test_out, stamp + b.str());
  }
  std::cerr << "generated " << corpus.dialogues.size() << " dialogues, "
            << corpus.utterance_count() << " utterances\n";
  return 0;
}

int cmd_extract_cues(const std::string& corpus_path, int max_len,
                     int min_count, double entropy_max, int top_k,
                     const std::string& out_path) {
  Corpus train = load_corpus(corpus_path);
  auto candidates = extract_candidates(train, max_len, min_count);
  auto set = select_cue_patterns(std::move(candidates), entropy_max,
                                 std::size_t(std::max(0, top_k)));
  ConfigLines cfg;
  cfg.add("command", "extract-cues");
  cfg.add("corpus_hash", hash_hex(file_content_hash(corpus_path)));
  cfg.add("max_len", max_len);
  cfg.add("min_count", min_count);
  cfg.add("entropy_max", entropy_max);
  cfg.add("top_k", top_k);
  set.provenance = cfg.hash();
  std::ostringstream os;
  save_cue_set(set, os);
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    write_file(out_path, os.str());
  }
  std::cerr << "selected " << set.size() << " cue patterns\n";
  return 0;
}

int cmd_train(const std::string& corpus_path, const std::string& conditions,
              const std::string& mode, int R, std::uint64_t seed,
              long long threshold, int window, std::uint64_t budget,
              const CueOptions& cue_opts, const std::string& out_path) {
  Corpus train = load_corpus(corpus_path);
  auto conds = parse_condition_list(conditions, window);
  auto templates = enumerate_templates(conds);
  CuePatternSet cues = cue_opts.resolve(train);

  ConfigLines cfg;
  cfg.add("command", "train");
  cfg.add("corpus_hash", hash_hex(file_content_hash(corpus_path)));
  cfg.add("conditions", conditions);
  cfg.add("mode", mode);
  cfg.add("threshold", threshold);
  cfg.add("window", window);
  cue_opts.describe(cfg);
  if (mode == "mc") {
    cfg.add("R", R);
    cfg.add("seed", seed);
  }

  TrainOptions opts;
  opts.budget = budget;
  opts.config_hash = cfg.hash();
  TrainStats stats;
  opts.stats = &stats;
  RuleSequence model;
  if (mode == "standard") {
    model = train_standard(train, templates, threshold, cues, opts);
  } else if (mode == "mc") {
    McConfig mc{R, seed, threshold};
    model = train_monte_carlo(train, templates, mc, cues, opts);
  } else {
    throw DataError("mode must be standard or mc");
  }
  write_file(out_path, save_model_string(model));
  std::cerr << "emitted " << model.rules.size() << " rules in "
            << stats.pass_count() << " passes (" << stats.rules_generated
            << " rules generated)\n";
  if (stats.emissions.size() >= 4) {
    // diagnostic: early rules tend to fire on many more instances than the
    // specific late ones
    const std::size_t half = stats.emissions.size() / 2;
    double early = 0, late = 0;
    for (std::size_t i = 0; i < stats.emissions.size(); ++i)
      (i < half ? early : late) += double(stats.emissions[i].fired);
    std::cerr << "mean firings per rule: first half "
              << early / double(half) << ", second half "
              << late / double(stats.emissions.size() - half) << "\n";
  }
  return 0;
}

int cmd_tag(const std::string& model_path, const std::string& corpus_path,
            const std::string& out_path) {
  RuleSequence model = load_model_file(model_path);
  Corpus corpus = load_corpus(corpus_path);
  Corpus tagged = apply_sequence(model, corpus);
  ConfigLines cfg;
  cfg.add("command", "tag");
  cfg.add("model_hash", hash_hex(file_content_hash(model_path)));
  cfg.add("corpus_hash", hash_hex(file_content_hash(corpus_path)));
  std::ostringstream os;
  write_tagged_dacts(tagged, cfg.hash(), os);
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    write_file(out_path, os.str());
  }
  return 0;
}

int cmd_committee_train(const std::string& corpus_path,
                        const std::string& conditions, int C, int R,
                        std::uint64_t seed, long long threshold, int window,
                        const CueOptions& cue_opts,
                        const std::string& out_path) {
  Corpus train = load_corpus(corpus_path);
  auto conds = parse_condition_list(conditions, window);
  auto templates = enumerate_templates(conds);
  CuePatternSet cues = cue_opts.resolve(train);

  ConfigLines cfg;
  cfg.add("command", "committee-train");
  cfg.add("corpus_hash", hash_hex(file_content_hash(corpus_path)));
  cfg.add("conditions", conditions);
  cfg.add("C", C);
  cfg.add("R", R);
  cfg.add("seed", seed);
  cfg.add("threshold", threshold);
  cfg.add("window", window);
  cue_opts.describe(cfg);

  TrainOptions opts;
  opts.config_hash = cfg.hash();
  McConfig mc{R, seed, threshold};
  CommitteeModel model = train_committee(train, templates, mc, C, cues, opts);
  std::ostringstream os;
  save_committee(model, os);
  write_file(out_path, os.str());
  std::size_t rules = 0;
  for (const auto& m : model.members) rules += m.rules.size();
  std::cerr << "trained " << C << " members, " << rules << " rules total\n";
  return 0;
}

int cmd_committee_tag(const std::string& committee_path,
                      const std::string& corpus_path, int min_confidence,
                      const std::string& formula,
                      const std::string& out_path) {
  if (formula == "entropy")
    throw DataError(
        "confidence formula 'entropy' is reserved but not implemented; "
        "use 'vote'");
  if (formula != "vote")
    throw DataError("unknown confidence formula '" + formula + "'");
  CommitteeModel model = load_committee_file(committee_path);
  Corpus corpus = load_corpus(corpus_path);
  if (min_confidence < 1 || min_confidence > model.size())
    throw DataError("--min-confidence out of range [1, C]");
  auto tags = tag_with_confidence(model, corpus);
  ConfigLines cfg;
  cfg.add("command", "committee-tag");
  cfg.add("committee_hash", hash_hex(file_content_hash(committee_path)));
  cfg.add("corpus_hash", hash_hex(file_content_hash(corpus_path)));
  cfg.add("min_confidence", min_confidence);
  std::ostringstream os;
  write_confidence_tsv(tags, model.size(), min_confidence, cfg.hash(),
                       corpus_structure_hash(corpus), os);
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    write_file(out_path, os.str());
  }
  return 0;
}

// Reads a predictions file produced by `tag` (tagged .dacts) or
// `committee-tag` (confidence TSV).
struct Predictions {
  bool is_confidence = false;
  Corpus tagged;                        // when tagged .dacts
  std::vector<TagWithConfidence> tags;  // when confidence TSV
  int C = 1;
  std::optional<std::uint64_t> corpus_hash;
};

Predictions load_predictions(const std::string& path) {
  Predictions p;
  const std::string content = read_file(path);
  p.corpus_hash = stored_corpus_hash(content);
  if (content.rfind("# tbltag confidence v1", 0) == 0) {
    p.is_confidence = true;
    std::istringstream in(content);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      if (line[0] == '#') {
        std::istringstream ls(line);
        std::string mark, key;
        int value = 0;
        if (ls >> mark >> key >> value && key == "C") p.C = value;
        continue;
      }
      if (line.rfind("dialogue_id", 0) == 0) continue;  // column header
      auto fields = detail::split_tabs(line);
      if (fields.size() < 4)
        throw ParseError("expected at least 4 tab-separated fields", lineno);
      TagWithConfidence t;
      t.dialogue_id = fields[0];
      try {
        t.position = std::stoi(fields[1]);
        t.confidence = std::stoi(fields[3]);
      } catch (const std::exception&) {
        throw ParseError("bad numeric field", lineno);
      }
      t.tag = fields[2];
      p.tags.push_back(std::move(t));
    }
  } else {
    std::istringstream in(content);
    p.tagged = parse_corpus(in, "dacts");
  }
  return p;
}

int cmd_eval(const std::string& gold_path, const std::string& tags_path,
             int min_confidence, bool force, const std::string& out_path,
             const std::string& experiment_path,
             const std::string& out_dir) {
  if (!experiment_path.empty()) {
    ExperimentSpec spec = ExperimentSpec::load(experiment_path);
    ExperimentResult result = run_experiment(spec);
    write_experiment_reports(result, spec,
                             out_dir.empty() ? "." : out_dir);
    if (result.partial) {
      std::cerr << "experiment aborted after " << result.trials.size()
                << " trial(s): " << result.failure
                << " (partial reports written)\n";
      return 2;
    }
    std::cerr << "experiment complete: " << result.trials.size()
              << " trials\n";
    return 0;
  }
  if (gold_path.empty() || tags_path.empty())
    throw DataError("eval needs --gold and --tags (or --experiment)");
  Corpus gold = load_corpus(gold_path);
  Predictions pred = load_predictions(tags_path);
  if (pred.corpus_hash &&
      *pred.corpus_hash != corpus_structure_hash(gold) && !force)
    throw DataError(
        "predictions were produced for a different corpus (structure hash "
        "mismatch); pass --force to evaluate anyway");

  ConfigLines cfg;
  cfg.add("command", "eval");
  cfg.add("gold_hash", hash_hex(file_content_hash(gold_path)));
  cfg.add("tags_hash", hash_hex(file_content_hash(tags_path)));
  cfg.add("min_confidence", min_confidence);
  std::ostringstream os;
  os << "# tbltag eval v1 config " << hash_hex(cfg.hash()) << "\n";
  if (pred.is_confidence) {
    auto curve = confidence_curve(pred.tags, gold, pred.C);
    if (min_confidence < 1 || min_confidence > pred.C)
      throw DataError("--min-confidence out of range [1, C]");
    os << "m\tcoverage\tprecision\n";
    for (const auto& row : curve) {
      os << row.m << '\t' << detail::fixed6(row.coverage) << '\t'
         << (row.precision ? detail::fixed6(*row.precision)
                           : std::string("undefined"))
         << '\n';
    }
    for (const auto& row : curve) {
      if (row.m != min_confidence) continue;
      std::cerr << "at m=" << row.m << ": coverage "
                << detail::fixed6(row.coverage) << ", precision "
                << (row.precision ? detail::fixed6(*row.precision)
                                  : std::string("undefined"))
                << "\n";
    }
  } else {
    auto report = accuracy(pred.tagged, gold);
    os << "accuracy\tcorrect\ttotal\n";
    os << detail::fixed6(report.accuracy) << '\t' << report.correct << '\t'
       << report.total << '\n';
    os << "gold\tpredicted\tcount\n";
    for (const auto& [pair, count] : report.confusion)
      os << pair.first << '\t' << pair.second << '\t' << count << '\n';
    std::cerr << "accuracy " << detail::fixed6(report.accuracy) << " ("
              << report.correct << "/" << report.total << ")\n";
  }
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    write_file(out_path, os.str());
  }
  return 0;
}

int cmd_bench(const std::string& corpus_path, const std::string& conditions,
              int max_n, const std::string& mode, int R, std::uint64_t seed,
              long long threshold, std::uint64_t budget, int window,
              const CueOptions& cue_opts, const std::string& out_path) {
  Corpus train = load_corpus(corpus_path);
  auto conds = parse_condition_list(conditions, window);
  if (max_n < 0) max_n = static_cast<int>(conds.size());
  CuePatternSet cues = cue_opts.resolve(train);
  ConfigLines cfg;
  cfg.add("command", "bench");
  cfg.add("corpus_hash", hash_hex(file_content_hash(corpus_path)));
  cfg.add("conditions", conditions);
  cfg.add("max_n", max_n);
  cfg.add("mode", mode);
  cfg.add("R", R);
  cfg.add("seed", seed);
  cfg.add("threshold", threshold);
  cfg.add("budget", budget);
  cue_opts.describe(cfg);

  const bool run_standard = mode == "standard" || mode == "both";
  const bool run_mc = mode == "mc" || mode == "both";
  if (!run_standard && !run_mc)
    throw DataError("bench mode must be standard, mc, or both");
  McConfig mc{R, seed, threshold};
  auto rows =
      bench_generation(train, conds, max_n, run_standard, run_mc, mc, cues,
                       budget);
  std::ostringstream os;
  write_bench_tsv(rows, os, cfg.hash());
  if (out_path.empty()) {
    std::cout << os.str();
  } else {
    write_file(out_path, os.str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"transformation-based dialogue-act tagger"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus");
  std::string synth_config, synth_out, synth_train_out, synth_test_out;
  std::uint64_t synth_seed = 1;
  int synth_test_count = 0;
  synth->add_option("--config", synth_config, "generator config file")
      ->required();
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--out", synth_out, "output corpus (.dacts)");
  synth->add_option("--test-count", synth_test_count,
                    "also split off the last N dialogues");
  synth->add_option("--train-out", synth_train_out, "train split output");
  synth->add_option("--test-out", synth_test_out, "test split output");

  // extract-cues
  auto* extract = app.add_subcommand("extract-cues",
                                     "select low-entropy cue patterns");
  std::string ec_corpus, ec_out;
  int ec_max_len = 3, ec_min_count = 5, ec_top_k = 0;
  double ec_entropy_max = 1.0;
  extract->add_option("--corpus", ec_corpus, "tagged training corpus")
      ->required();
  extract->add_option("--max-len", ec_max_len, "max pattern length");
  extract->add_option("--min-count", ec_min_count, "min utterance count");
  extract->add_option("--entropy-max", ec_entropy_max,
                      "entropy ceiling in bits");
  extract->add_option("--top-k", ec_top_k, "keep only k lowest-entropy");
  extract->add_option("--out", ec_out, "output .cues file (default stdout)");

  // train
  auto* train = app.add_subcommand("train", "train a rule-sequence model");
  std::string tr_corpus, tr_conditions = "cue:0,tag:-1,length:0,speaker:0";
  std::string tr_mode = "mc", tr_out;
  int tr_R = 6, tr_window = 3;
  std::uint64_t tr_seed = 0, tr_budget = 0;
  long long tr_threshold = 2;
  CueOptions tr_cues;
  train->add_option("--corpus", tr_corpus, "tagged training corpus")
      ->required();
  train->add_option("--conditions", tr_conditions,
                    "comma-separated feature:distance list");
  train->add_option("--mode", tr_mode, "standard or mc");
  train->add_option("--R", tr_R, "Monte Carlo samples per incorrect tag");
  train->add_option("--seed", tr_seed, "Monte Carlo seed");
  train->add_option("--threshold", tr_threshold, "improvement threshold");
  train->add_option("--window", tr_window, "max |distance| for conditions");
  train->add_option("--budget", tr_budget,
                    "abort after this many generated rules (0 = unlimited)");
  tr_cues.attach(train);
  train->add_option("--out", tr_out, "output model (.tblm)")->required();

  // tag
  auto* tag = app.add_subcommand("tag", "apply a model to a corpus");
  std::string tg_model, tg_corpus, tg_out;
  tag->add_option("--model", tg_model, "model file (.tblm)")->required();
  tag->add_option("--corpus", tg_corpus, "corpus to tag")->required();
  tag->add_option("--out", tg_out, "tagged output (default stdout)");

  // committee-train
  auto* ctrain = app.add_subcommand("committee-train",
                                    "train a committee of models");
  std::string ct_corpus, ct_conditions = "cue:0,tag:-1,length:0,speaker:0";
  std::string ct_out;
  int ct_C = 5, ct_R = 6, ct_window = 3;
  std::uint64_t ct_seed = 0;
  long long ct_threshold = 2;
  CueOptions ct_cues;
  ctrain->add_option("--corpus", ct_corpus, "tagged training corpus")
      ->required();
  ctrain->add_option("--conditions", ct_conditions,
                     "comma-separated feature:distance list");
  ctrain->add_option("--C", ct_C, "committee size");
  ctrain->add_option("--R", ct_R, "Monte Carlo samples per incorrect tag");
  ctrain->add_option("--seed", ct_seed, "committee seed");
  ctrain->add_option("--threshold", ct_threshold, "improvement threshold");
  ctrain->add_option("--window", ct_window, "max |distance| for conditions");
  ct_cues.attach(ctrain);
  ctrain->add_option("--out", ct_out, "output committee (.tblc)")->required();

  // committee-tag
  auto* ctag = app.add_subcommand("committee-tag",
                                  "tag with confidence measures");
  std::string cg_committee, cg_corpus, cg_out, cg_formula = "vote";
  int cg_min_confidence = 1;
  ctag->add_option("--committee", cg_committee, "committee file (.tblc)")
      ->required();
  ctag->add_option("--corpus", cg_corpus, "corpus to tag")->required();
  ctag->add_option("--min-confidence", cg_min_confidence,
                   "abstention threshold m");
  ctag->add_option("--confidence-formula", cg_formula,
                   "vote (default); entropy is reserved, not implemented");
  ctag->add_option("--out", cg_out, "confidence TSV (default stdout)");

  // eval
  auto* eval = app.add_subcommand("eval",
                                  "score predictions or run an experiment");
  std::string ev_gold, ev_tags, ev_out, ev_experiment, ev_out_dir;
  int ev_min_confidence = 1;
  bool ev_force = false;
  eval->add_option("--gold", ev_gold, "gold corpus (.dacts)");
  eval->add_option("--tags", ev_tags,
                   "predictions (tagged .dacts or confidence TSV)");
  eval->add_option("--min-confidence", ev_min_confidence,
                   "confidence slice to report");
  eval->add_flag("--force", ev_force, "skip the corpus-hash check");
  eval->add_option("--out", ev_out, "report output (default stdout)");
  eval->add_option("--experiment", ev_experiment,
                   "experiment spec file; runs the whole trial grid");
  eval->add_option("--out-dir", ev_out_dir,
                   "report directory for --experiment");

  // bench
  auto* bench = app.add_subcommand("bench",
                                   "condition-sweep generation benchmark");
  std::string bn_corpus, bn_conditions, bn_mode = "both", bn_out;
  int bn_max_n = -1, bn_R = 6, bn_window = 3;
  std::uint64_t bn_seed = 0, bn_budget = 50000000;
  long long bn_threshold = 2;
  CueOptions bn_cues;
  bench->add_option("--corpus", bn_corpus, "tagged training corpus")
      ->required();
  bench->add_option("--conditions", bn_conditions,
                    "ordered feature:distance list; prefixes 0..n are swept")
      ->required();
  bench->add_option("--max-n", bn_max_n, "largest prefix (default: all)");
  bench->add_option("--mode", bn_mode, "standard, mc, or both");
  bench->add_option("--R", bn_R, "Monte Carlo samples per incorrect tag");
  bench->add_option("--seed", bn_seed, "Monte Carlo seed");
  bench->add_option("--threshold", bn_threshold, "improvement threshold");
  bench->add_option("--budget", bn_budget,
                    "standard-mode generated-rule budget");
  bench->add_option("--window", bn_window, "max |distance| for conditions");
  bn_cues.attach(bench);
  bench->add_option("--out", bn_out, "bench TSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;  // usage errors are always exit 1
  }

  try {
    if (*synth)
      return cmd_synth(synth_config, synth_seed, synth_out, synth_test_count,
                       synth_train_out, synth_test_out);
    if (*extract)
      return cmd_extract_cues(ec_corpus, ec_max_len, ec_min_count,
                              ec_entropy_max, ec_top_k, ec_out);
    if (*train)
      return cmd_train(tr_corpus, tr_conditions, tr_mode, tr_R, tr_seed,
                       tr_threshold, tr_window, tr_budget, tr_cues, tr_out);
    if (*tag) return cmd_tag(tg_model, tg_corpus, tg_out);
    if (*ctrain)
      return cmd_committee_train(ct_corpus, ct_conditions, ct_C, ct_R,
                                 ct_seed, ct_threshold, ct_window, ct_cues,
                                 ct_out);
    if (*ctag)
      return cmd_committee_tag(cg_committee, cg_corpus, cg_min_confidence,
                               cg_formula, cg_out);
    if (*eval)
      return cmd_eval(ev_gold, ev_tags, ev_min_confidence, ev_force, ev_out,
                      ev_experiment, ev_out_dir);
    if (*bench)
      return cmd_bench(bn_corpus, bn_conditions, bn_max_n, bn_mode, bn_R,
                       bn_seed, bn_threshold, bn_budget, bn_window, bn_cues,
                       bn_out);
    std::cerr << "no subcommand\n";
    return 1;
  } catch (const InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
