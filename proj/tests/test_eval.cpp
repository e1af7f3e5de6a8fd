#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace tbltag;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  REQUIRE(in);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("accuracy of identical corpora is exactly one", "[eval]") {
  Corpus fig1 = testsup::figure1();
  auto report = accuracy(fig1, fig1);
  CHECK(report.accuracy == 1.0);
  CHECK(report.correct == 6);
  CHECK(report.total == 6);
}

TEST_CASE("the worked-example rules score 1.0 on their dialogue", "[eval]") {
  Corpus tagged = apply_sequence(testsup::figure2(), testsup::figure1());
  CHECK(accuracy(tagged, testsup::figure1()).accuracy == 1.0);
}

TEST_CASE("one mislabeled utterance out of ten scores 0.9", "[eval]") {
  std::vector<std::array<std::string, 3>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({"a", "word", "A"});
  Corpus gold = testsup::make_dialogue(rows);
  Corpus pred = gold;
  pred.tagset.insert("B");
  pred.dialogues[0].utterances[3].working_tag = "B";
  auto report = accuracy(pred, gold);
  CHECK(report.accuracy == Catch::Approx(0.9));
  CHECK(report.confusion.at({"A", "B"}) == 1);
  CHECK(report.confusion.at({"A", "A"}) == 9);
}

TEST_CASE("accuracy rejects misaligned corpora", "[eval]") {
  Corpus a = parse_corpus_string("d1\t0\ta\tA\thello\n");
  Corpus b = parse_corpus_string("d2\t0\ta\tA\thello\n");
  CHECK_THROWS_AS(accuracy(a, b), DataError);
  Corpus c = parse_corpus_string("d1\t0\ta\tA\thello\nd1\t1\ta\tA\tbye\n");
  CHECK_THROWS_AS(accuracy(a, c), DataError);
}

TEST_CASE("accuracy is invariant under dialogue reordering", "[eval]") {
  SplitMix64 rng(15);
  testsup::RandomCorpusParams params;
  params.dialogues = 5;
  Corpus gold = testsup::random_corpus(params, rng);
  Corpus pred = gold;
  pred.dialogues[1].utterances[0].working_tag =
      pred.dialogues[1].utterances[0].gold_tag == "T0" ? "T1" : "T0";
  const double before = accuracy(pred, gold).accuracy;
  // reorder both corpora the same way
  auto rotate_corpus = [](Corpus c) {
    std::rotate(c.dialogues.begin(), c.dialogues.begin() + 2,
                c.dialogues.end());
    return c;
  };
  CHECK(accuracy(rotate_corpus(pred), rotate_corpus(gold)).accuracy ==
        before);
}

TEST_CASE("confidence curve on a unanimous correct committee", "[eval]") {
  std::vector<std::array<std::string, 3>> rows;
  for (int i = 0; i < 8; ++i) rows.push_back({"a", "word", "A"});
  Corpus gold = testsup::make_dialogue(rows);
  std::vector<TagWithConfidence> tags;
  for (int i = 0; i < 8; ++i) tags.push_back({"d1", i, "A", 5});
  auto rows_out = confidence_curve(tags, gold, 5);
  REQUIRE(rows_out.size() == 5);
  for (const auto& r : rows_out) {
    CHECK(r.coverage == 1.0);
    REQUIRE(r.precision.has_value());
    CHECK(*r.precision == 1.0);
  }
}

TEST_CASE("confidence curve matches a hand count", "[eval]") {
  std::vector<std::array<std::string, 3>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({"a", "word", "A"});
  Corpus gold = testsup::make_dialogue(rows);
  gold.tagset.insert("B");
  std::vector<TagWithConfidence> tags;
  // confidences: 3,3,2,2,2,1,1,1,1,1; wrong tags at positions 2 and 5
  const int conf[] = {3, 3, 2, 2, 2, 1, 1, 1, 1, 1};
  for (int i = 0; i < 10; ++i)
    tags.push_back({"d1", i, (i == 2 || i == 5) ? "B" : "A", conf[i]});
  auto curve = confidence_curve(tags, gold, 3);
  REQUIRE(curve.size() == 3);
  // m=3: 2 covered, both correct
  CHECK(curve[0].m == 3);
  CHECK(curve[0].covered == 2);
  CHECK(*curve[0].precision == 1.0);
  // m=2: 5 covered, 4 correct
  CHECK(curve[1].covered == 5);
  CHECK(*curve[1].precision == Catch::Approx(0.8));
  // m=1: all 10, 8 correct
  CHECK(curve[2].coverage == 1.0);
  CHECK(*curve[2].precision == Catch::Approx(0.8));
  // coverage is monotone non-increasing as m rises
  for (std::size_t i = 1; i < curve.size(); ++i)
    CHECK(curve[i - 1].coverage <= curve[i].coverage);
}

TEST_CASE("empty coverage reports undefined precision, not zero", "[eval]") {
  std::vector<std::array<std::string, 3>> rows = {{"a", "word", "A"}};
  Corpus gold = testsup::make_dialogue(rows);
  std::vector<TagWithConfidence> tags = {{"d1", 0, "A", 1}};
  auto curve = confidence_curve(tags, gold, 3);
  REQUIRE(curve.size() == 3);
  CHECK(curve[0].m == 3);
  CHECK(curve[0].covered == 0);
  CHECK_FALSE(curve[0].precision.has_value());
  CHECK(curve[2].coverage == 1.0);
}

TEST_CASE("majority baseline picks the most frequent tag", "[eval]") {
  Corpus fig1 = testsup::figure1();
  RuleSequence baseline = majority_baseline(fig1);
  REQUIRE(baseline.rules.size() == 1);
  // frequency count: SUGGEST appears twice, everything else once
  CHECK(baseline.rules[0].rule.new_tag == "SUGGEST");
  CHECK(baseline.rules[0].improvement == 2);

  std::vector<std::array<std::string, 3>> rows;
  for (int i = 0; i < 4; ++i) rows.push_back({"a", "word", "ONLY"});
  Corpus single = testsup::make_dialogue(rows);
  RuleSequence trivial = majority_baseline(single);
  CHECK(trivial.rules[0].rule.new_tag == "ONLY");
  Corpus tagged = apply_sequence(trivial, single);
  CHECK(accuracy(tagged, single).accuracy == 1.0);

  CHECK_THROWS_AS(majority_baseline(Corpus{}), DataError);
}

TEST_CASE("trained models never lose to the baseline on training data",
          "[eval]") {
  for (std::uint64_t seed : {3u, 14u, 15u}) {
    SplitMix64 rng(seed);
    testsup::RandomCorpusParams params;
    params.dialogues = 5;
    Corpus train = testsup::random_corpus(params, rng);
    const auto cues = testsup::unigram_cues(train);
    auto tmpls = enumerate_templates(
        {{FeatureKind::Cue, 0}, {FeatureKind::Tag, -1}});
    RuleSequence model = train_standard(train, tmpls, 1, cues);
    const double trained =
        accuracy(apply_sequence(model, train), train).accuracy;
    const double base =
        accuracy(apply_sequence(majority_baseline(train), train), train)
            .accuracy;
    CHECK(trained >= base);
  }
}

TEST_CASE("paired t statistic and critical values", "[eval]") {
  std::vector<double> a = {0.8, 0.82, 0.81, 0.85, 0.83};
  std::vector<double> b = {0.7, 0.72, 0.73, 0.74, 0.70};
  CHECK(paired_t_statistic(a, b) > t_critical_05(4));
  CHECK(paired_t_statistic(b, a) < 0);
  auto ms = mean_std({1.0, 2.0, 3.0});
  CHECK(ms.mean == Catch::Approx(2.0));
  CHECK(ms.std_dev == Catch::Approx(1.0));
  CHECK_THROWS_AS(paired_t_statistic({1.0}, {2.0}), DataError);
}

TEST_CASE("experiment runner aggregates and reproduces reports", "[eval]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "tbltag_exp_test";
  fs::remove_all(dir);

  // small synthetic experiment; R=1 keeps real seed-to-seed variance
  ExperimentSpec spec;
  spec.synth_config_path = testsup::fixture_path("bench.gencfg");
  spec.synth_seed = 5;
  spec.test_dialogues = 5;
  spec.conditions = "cue:0,tag:-1";
  spec.mode = "mc";
  spec.R = 1;
  spec.threshold = 2;
  spec.C = 1;
  spec.seeds = {1, 2, 3, 4, 5, 6};
  spec.sizes = {50, 100};
  spec.cue_max_len = 1;
  spec.cue_min_count = 4;
  spec.cue_entropy_max = 0.7;
  spec.cue_top_k = 40;

  // keep the corpus small for the unit test by pointing at a trimmed config
  GeneratorConfig small =
      GeneratorConfig::load(testsup::fixture_path("bench.gencfg"));
  small.dialogues = 25;
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "small.gencfg");
    out << "tags =";
    for (const auto& t : small.tags) out << ' ' << t;
    out << "\ndialogues = 25\nutterances_min = 15\nutterances_max = 15\n"
        << "tokens_min = 4\ntokens_max = 9\nnoise = 0.10\nspeakers = a b\n"
        << "fillers =";
    for (const auto& f : small.fillers) out << ' ' << f;
    out << "\n";
    for (const auto& [tag, words] : small.cues) {
      out << "cue." << tag << " =";
      for (const auto& w : words) out << ' ' << w;
      out << "\n";
    }
  }
  spec.synth_config_path = (dir / "small.gencfg").string();

  ExperimentResult result = run_experiment(spec);
  REQUIRE(result.trials.size() == 12);
  REQUIRE(result.by_size.size() == 2);
  for (const auto& agg : result.by_size) {
    CHECK(agg.accuracy.n == 6);
    CHECK(agg.accuracy.std_dev > 0.0);  // MC seeds differ
    CHECK(agg.accuracy.mean >= agg.accuracy.min);
    CHECK(agg.accuracy.mean <= agg.accuracy.max);
  }
  CHECK_FALSE(result.partial);

  write_experiment_reports(result, spec, (dir / "rep1").string());
  write_experiment_reports(result, spec, (dir / "rep2").string());
  // replaying the spec reproduces identical report bytes
  ExperimentResult again = run_experiment(spec);
  write_experiment_reports(again, spec, (dir / "rep3").string());
  for (const char* name : {"trials.tsv", "summary.tsv", "summary.txt"}) {
    CHECK(slurp(dir / "rep1" / name) == slurp(dir / "rep2" / name));
    CHECK(slurp(dir / "rep1" / name) == slurp(dir / "rep3" / name));
  }
  fs::remove_all(dir);
}

TEST_CASE("a failing trial aborts with partial results flagged", "[eval]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "tbltag_partial_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  // corpus whose LAST training dialogue is untagged: the 50% subset trains
  // fine, the 100% subset hits the untagged data during cue extraction
  std::string raw;
  for (int d = 0; d < 8; ++d) {
    const bool poison = d == 5;  // inside the training range, late
    for (int u = 0; u < 4; ++u) {
      raw += "d" + std::to_string(d) + "\t" + std::to_string(u) + "\ta\t" +
             (poison ? "-" : (u % 2 ? "A" : "B")) + "\thello there\n";
    }
  }
  const fs::path corpus_path = dir / "poison.dacts";
  {
    std::ofstream out(corpus_path);
    out << raw;
  }
  ExperimentSpec spec;
  spec.corpus_path = corpus_path.string();
  spec.test_dialogues = 2;
  spec.conditions = "cue:0";
  spec.mode = "mc";
  spec.R = 2;
  spec.C = 1;
  spec.seeds = {1};
  spec.sizes = {50, 100};
  spec.cue_max_len = 1;
  spec.cue_min_count = 1;

  ExperimentResult result = run_experiment(spec);
  CHECK(result.partial);
  CHECK_FALSE(result.failure.empty());
  CHECK(result.trials.size() == 1);  // the 50% trial survived
  write_experiment_reports(result, spec, dir.string());
  CHECK(slurp(dir / "summary.txt").find("PARTIAL") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("experiment spec files parse and hash deterministically",
          "[eval]") {
  std::istringstream in(
      "# comment\n"
      "corpus = data/train.dacts\n"
      "test_dialogues = 20\n"
      "conditions = cue:0,tag:-1\n"
      "mode = mc\n"
      "R = 6\n"
      "threshold = 2\n"
      "C = 5\n"
      "seeds = 1..10\n"
      "sizes = 25,50,100\n");
  ExperimentSpec spec = ExperimentSpec::parse(in);
  CHECK(spec.seeds.size() == 10);
  CHECK(spec.seeds.front() == 1);
  CHECK(spec.seeds.back() == 10);
  CHECK(spec.sizes == std::vector<int>{25, 50, 100});
  CHECK(spec.C == 5);
  std::istringstream in2(
      "corpus = data/train.dacts\ntest_dialogues = 20\nconditions = "
      "cue:0,tag:-1\nmode = mc\nR = 6\nthreshold = 2\nC = 5\nseeds = "
      "1..10\nsizes = 25,50,100\n");
  CHECK(ExperimentSpec::parse(in2).hash() == spec.hash());

  std::istringstream bad("mode = mc\n");
  CHECK_THROWS_AS(ExperimentSpec::parse(bad), DataError);
}

TEST_CASE("accuracy after application survives dialogue reordering",
          "[eval]") {
  SplitMix64 rng(77);
  testsup::RandomCorpusParams params;
  params.dialogues = 6;
  Corpus test = testsup::random_corpus(params, rng);
  const auto cues = testsup::unigram_cues(test);
  auto tmpls = enumerate_templates({{FeatureKind::Cue, 0}});
  RuleSequence model = train_standard(test, tmpls, 1, cues);

  auto rotated = test;
  std::rotate(rotated.dialogues.begin(), rotated.dialogues.begin() + 3,
              rotated.dialogues.end());
  CHECK(accuracy(apply_sequence(model, test), test).accuracy ==
        accuracy(apply_sequence(model, rotated), rotated).accuracy);
}

TEST_CASE("parallel trials fold to the same reports as serial", "[eval]") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "tbltag_threads_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "g.gencfg");
    out << "tags = A B C\ndialogues = 16\nutterances_min = 6\n"
        << "utterances_max = 6\ntokens_min = 3\ntokens_max = 6\n"
        << "noise = 0.1\nspeakers = a b\nfillers = x y z w\n"
        << "cue.A = alpha\ncue.B = beta\ncue.C = gamma\n";
  }
  ExperimentSpec spec;
  spec.synth_config_path = (dir / "g.gencfg").string();
  spec.synth_seed = 2;
  spec.test_dialogues = 4;
  spec.conditions = "cue:0,tag:-1";
  spec.mode = "mc";
  spec.R = 2;
  spec.C = 1;
  spec.seeds = {1, 2, 3, 4, 5};
  spec.sizes = {100};
  spec.cue_max_len = 1;
  spec.cue_min_count = 2;

  setenv("TBLTAG_THREADS", "1", 1);
  ExperimentResult serial = run_experiment(spec);
  setenv("TBLTAG_THREADS", "4", 1);
  ExperimentResult parallel = run_experiment(spec);
  unsetenv("TBLTAG_THREADS");

  write_experiment_reports(serial, spec, (dir / "serial").string());
  write_experiment_reports(parallel, spec, (dir / "parallel").string());
  for (const char* name : {"trials.tsv", "summary.tsv", "summary.txt"}) {
    std::ifstream a(dir / "serial" / name), b(dir / "parallel" / name);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
  }
  fs::remove_all(dir);
}
