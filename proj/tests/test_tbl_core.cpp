#include <catch2/catch_amalgamated.hpp>

#include "support.hpp"

using namespace tbltag;

namespace {

long long count_correct(const Corpus& c) {
  long long n = 0;
  for (const auto& d : c.dialogues)
    for (const auto& u : d.utterances)
      if (u.tagged() && u.working_tag == u.gold_tag) ++n;
  return n;
}

Rule unconditional(const std::string& tag) {
  Rule r;
  r.new_tag = tag;
  return r;
}

}  // namespace

TEST_CASE("unconditional SUGGEST scores +2 on the dummied dialogue",
          "[tbl_core]") {
  Corpus fig1 = initialize_dummy(testsup::figure1());
  CHECK(improvement_score(unconditional("SUGGEST"), fig1) == 2);
  CHECK(improvement_score(unconditional("GREET"), fig1) == 1);
}

TEST_CASE("a rule that fires nowhere scores zero", "[tbl_core]") {
  Corpus fig1 = initialize_dummy(testsup::figure1());
  Rule r = unconditional("BYE");
  ConditionInstance inst;
  inst.cond = {FeatureKind::Cue, 0};
  inst.op = TestOp::Includes;
  inst.patterns = {{"zebra"}};
  r.antecedent.push_back(inst);
  const std::string before = serialize_corpus_string(fig1);
  CHECK(improvement_score(r, fig1) == 0);
  CHECK(apply_rule(r, fig1) == 0);
  CHECK(serialize_corpus_string(fig1) == before);
}

TEST_CASE("improvement equals the clone-apply oracle on random corpora",
          "[tbl_core]") {
  SplitMix64 rng(2024);
  testsup::RandomCorpusParams params;
  params.dialogues = 5;
  params.utterances_min = 8;
  params.utterances_max = 12;
  Corpus base = testsup::random_corpus(params, rng);
  REQUIRE(base.utterance_count() >= 40);
  const auto cues = testsup::unigram_cues(base);
  const auto tmpls = enumerate_templates({{FeatureKind::Cue, 0},
                                          {FeatureKind::Tag, -1},
                                          {FeatureKind::Length, 0}});
  Corpus work = initialize_dummy(base);
  // walk a few training steps so scores are exercised at different states
  for (int step = 0; step < 3; ++step) {
    auto candidates = testsup::enumerate_candidates(work, tmpls, cues);
    int checked = 0;
    for (const auto& r : candidates) {
      CHECK(improvement_score(r, work) ==
            testsup::clone_apply_improvement(r, work));
      if (++checked >= 120) break;  // plenty of coverage per state
    }
    auto choice = testsup::oracle_best_rule(work, tmpls, cues);
    if (!choice.found || choice.score < 1) break;
    apply_rule(choice.rule, work);
  }
}

TEST_CASE("generate_all_rules on a fully correct corpus is empty",
          "[tbl_core]") {
  Corpus fig1 = testsup::figure1();  // working == gold after parsing
  CHECK(generate_all_rules(fig1, enumerate_templates({}), {}).empty());
}

TEST_CASE("empty template over the dummied dialogue gives one rule per gold",
          "[tbl_core]") {
  Corpus fig1 = initialize_dummy(testsup::figure1());
  auto rules = generate_all_rules(fig1, enumerate_templates({}), {});
  // oracle: the set of distinct gold tags
  const auto all_gold = testsup::gold_tags(fig1);
  std::set<std::string> gold(all_gold.begin(), all_gold.end());
  REQUIRE(rules.size() == gold.size());
  REQUIRE(rules.size() == 5);
  for (const auto& r : rules) {
    CHECK(r.antecedent.empty());
    CHECK(gold.count(r.new_tag) == 1);
  }
}

TEST_CASE("generated rule count grows with the template set", "[tbl_core]") {
  Corpus fig1 = initialize_dummy(testsup::figure1());
  const auto cues = testsup::unigram_cues(fig1);
  std::vector<Condition> conds = {{FeatureKind::Cue, 0},
                                  {FeatureKind::Tag, -1},
                                  {FeatureKind::Length, 0},
                                  {FeatureKind::Speaker, 0}};
  std::size_t last = 0;
  for (std::size_t n = 0; n <= conds.size(); ++n) {
    std::vector<Condition> prefix(conds.begin(), conds.begin() + n);
    const auto count =
        generate_all_rules(fig1, enumerate_templates(prefix), cues).size();
    CHECK(count >= last);
    if (n > 0) CHECK(count > last);
    last = count;
  }
}

TEST_CASE("apply_rule sweeps the whole corpus once", "[tbl_core]") {
  Corpus fig1 = initialize_dummy(testsup::figure1());
  CHECK(apply_rule(unconditional("SUGGEST"), fig1) == 6);
  for (const auto& u : fig1.dialogues[0].utterances)
    CHECK(u.working_tag == "SUGGEST");
  // re-applying changes nothing
  CHECK(apply_rule(unconditional("SUGGEST"), fig1) == 0);
}

TEST_CASE("within-sweep tag visibility lets chain rules propagate",
          "[tbl_core]") {
  // four utterances, first tagged X, rest Y; rule: previous tag X -> X
  Corpus c = testsup::make_dialogue({{"a", "one", "X"},
                                     {"a", "two", "X"},
                                     {"a", "three", "X"},
                                     {"a", "four", "X"}});
  for (auto& u : c.dialogues[0].utterances) u.working_tag = "Y";
  c.dialogues[0].utterances[0].working_tag = "X";
  c.tagset.insert("Y");

  Rule chain;
  chain.new_tag = "X";
  ConditionInstance inst;
  inst.cond = {FeatureKind::Tag, -1};
  inst.op = TestOp::Equals;
  inst.sym_value = "X";
  chain.antecedent.push_back(inst);

  // hand simulation: position 1 sees X (pos 0), rewrites to X; position 2
  // then sees the fresh X, and so on down the dialogue in one sweep
  CHECK(improvement_score(chain, c) == 3);
  CHECK(apply_rule(chain, c) == 3);
  for (const auto& u : c.dialogues[0].utterances)
    CHECK(u.working_tag == "X");
}

TEST_CASE("self-breaking rules alternate within a sweep", "[tbl_core]") {
  // all tagged X; rule "previous tag X -> Y" must fire at 1, skip 2 (its
  // previous is now Y), fire at 3
  Corpus c = testsup::make_dialogue({{"a", "one", "X"},
                                     {"a", "two", "X"},
                                     {"a", "three", "X"},
                                     {"a", "four", "X"}});
  c.tagset.insert("Y");
  Rule flip;
  flip.new_tag = "Y";
  ConditionInstance inst;
  inst.cond = {FeatureKind::Tag, -1};
  inst.op = TestOp::Equals;
  inst.sym_value = "X";
  flip.antecedent.push_back(inst);
  CHECK(improvement_score(flip, c) == -2);
  CHECK(apply_rule(flip, c) == 2);
  std::vector<std::string> expect = {"X", "Y", "X", "Y"};
  CHECK(testsup::working_tags(c) == expect);
}

TEST_CASE("apply_sequence reproduces the worked example", "[tbl_core]") {
  Corpus tagged = apply_sequence(testsup::figure2(), testsup::figure1());
  const std::vector<std::string> expect = {"GREET",  "SUGGEST", "REJECT",
                                           "SUGGEST", "ACCEPT",  "BYE"};
  CHECK(testsup::working_tags(tagged) == expect);
}

TEST_CASE("the empty model leaves dummy tags", "[tbl_core]") {
  Corpus tagged = apply_sequence(RuleSequence{}, testsup::figure1());
  for (const auto& d : tagged.dialogues)
    for (const auto& u : d.utterances) CHECK(u.working_tag == kDummyTag);
}

TEST_CASE("training on a single-tag corpus emits one unconditional rule",
          "[tbl_core]") {
  std::vector<std::array<std::string, 3>> rows;
  for (int i = 0; i < 8; ++i) rows.push_back({"a", "word", "ONLY"});
  Corpus c = testsup::make_dialogue(rows);
  RuleSequence model = train_standard(c, enumerate_templates({}), 2, {});
  REQUIRE(model.rules.size() == 1);
  CHECK(model.rules[0].rule.antecedent.empty());
  CHECK(model.rules[0].rule.new_tag == "ONLY");
  CHECK(model.rules[0].improvement == 8);
}

TEST_CASE("zero-noise planted-cue corpus trains to perfect accuracy",
          "[tbl_core]") {
  GeneratorConfig cfg =
      GeneratorConfig::load(testsup::fixture_path("cue_recovery.gencfg"));
  cfg.dialogues = 25;
  Corpus train = generate_synthetic_corpus(cfg, 9);
  auto cues = select_cue_patterns(extract_candidates(train, 1, 3), 0.0);
  auto tmpls = enumerate_templates({{FeatureKind::Cue, 0}});
  RuleSequence model = train_standard(train, tmpls, 2, cues);
  Corpus tagged = apply_sequence(model, train);
  CHECK(count_correct(tagged) ==
        static_cast<long long>(train.utterance_count()));
}

TEST_CASE("emitted rules match the brute-force argmax oracle", "[tbl_core]") {
  // several small randomized corpora, traced pass by pass
  for (std::uint64_t seed : {11u, 22u, 33u, 44u}) {
    SplitMix64 rng(seed);
    testsup::RandomCorpusParams params;
    params.dialogues = 3;
    params.utterances_min = 4;
    params.utterances_max = 9;
    params.tags = 3;
    params.vocab = 8;
    Corpus base = testsup::random_corpus(params, rng);
    const auto cues = testsup::unigram_cues(base);
    const auto tmpls = enumerate_templates(
        {{FeatureKind::Cue, 0}, {FeatureKind::Tag, -1},
         {FeatureKind::Length, 0}});

    TrainStats stats;
    TrainOptions opts;
    opts.stats = &stats;
    RuleSequence model = train_standard(base, tmpls, 1, cues, opts);

    // replay the trainer's trajectory against the oracle
    Corpus work = initialize_dummy(base);
    for (const auto& emitted : model.rules) {
      auto choice = testsup::oracle_best_rule(work, tmpls, cues);
      REQUIRE(choice.found);
      CHECK(emitted.rule == choice.rule);
      CHECK(emitted.improvement == choice.score);
      apply_rule(choice.rule, work);
    }
    // and the stop was right: nothing at or above threshold remains
    auto final_choice = testsup::oracle_best_rule(work, tmpls, cues);
    if (final_choice.found) CHECK(final_choice.score < 1);
  }
}

TEST_CASE("greedy descent: correct count rises by exactly the improvement",
          "[tbl_core]") {
  SplitMix64 rng(7);
  testsup::RandomCorpusParams params;
  params.dialogues = 6;
  params.utterances_min = 6;
  params.utterances_max = 10;
  Corpus base = testsup::random_corpus(params, rng);
  const auto cues = testsup::unigram_cues(base);
  const auto tmpls = enumerate_templates(
      {{FeatureKind::Cue, 0}, {FeatureKind::Tag, -1},
       {FeatureKind::SpeakerChange, 0}});
  TrainStats stats;
  TrainOptions opts;
  opts.stats = &stats;
  RuleSequence model = train_standard(base, tmpls, 2, cues, opts);
  REQUIRE(stats.emissions.size() == model.rules.size());
  long long prev = 0;
  for (std::size_t i = 0; i < stats.emissions.size(); ++i) {
    const auto& em = stats.emissions[i];
    CHECK(em.score >= 2);
    CHECK(em.correct_after - em.correct_before == em.score);
    CHECK(em.correct_after > prev);
    prev = em.correct_after;
  }
  // emissions are bounded by |train| / threshold
  CHECK(model.rules.size() <= base.utterance_count() / 2);
}

TEST_CASE("training self-application reproduces the trainer's final tags",
          "[tbl_core]") {
  SplitMix64 rng(31);
  testsup::RandomCorpusParams params;
  params.dialogues = 4;
  Corpus base = testsup::random_corpus(params, rng);
  const auto cues = testsup::unigram_cues(base);
  const auto tmpls = enumerate_templates(
      {{FeatureKind::Cue, 0}, {FeatureKind::Tag, -1}});

  detail::Engine engine(base, tmpls, cues);
  RuleSequence model =
      engine.train(detail::Engine::Mode::Standard, 1, 0, 0, {});
  Corpus reapplied = apply_sequence(model, base);
  CHECK(testsup::working_tags(reapplied) == engine.working_tags());
}

TEST_CASE("training requires gold tags", "[tbl_core]") {
  Corpus untagged = parse_corpus_string("d1\t0\ta\t-\thello\n");
  CHECK_THROWS_AS(train_standard(untagged, enumerate_templates({}), 2, {}),
                  DataError);
  Corpus ok = parse_corpus_string("d1\t0\ta\tA\thello\n");
  CHECK_THROWS_AS(train_standard(ok, enumerate_templates({}), 0, {}),
                  DataError);
}

TEST_CASE("apply_sequence ignores incoming working tags", "[tbl_core]") {
  SplitMix64 rng(101);
  testsup::RandomCorpusParams params;
  params.dialogues = 4;
  Corpus base = testsup::random_corpus(params, rng);
  const auto cues = testsup::unigram_cues(base);
  auto tmpls = enumerate_templates(
      {{FeatureKind::Cue, 0}, {FeatureKind::Tag, -1}});
  RuleSequence model = train_standard(base, tmpls, 1, cues);

  Corpus scrambled = base;
  for (auto& d : scrambled.dialogues)
    for (auto& u : d.utterances)
      u.working_tag = (rng.below(2) == 0) ? kDummyTag : u.gold_tag;
  CHECK(testsup::working_tags(apply_sequence(model, base)) ==
        testsup::working_tags(apply_sequence(model, scrambled)));
}
