#include <cmath>
#include <random>

#include "cgdec/enumerate.hpp"
#include "cgdec/logical_form.hpp"
#include "cgdec/train.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cgdec;

namespace {

const std::vector<ActionId> kCountRedApple{0, 1, 6, 8, 18, 18};
const std::vector<ActionId> kCountRedAppleTwice{0, 1, 6, 8, 18, 1, 6, 8, 18};
const std::vector<ActionId> kWeightGreenApple{5, 1, 7, 8, 18};

Denotation den(const char* text) { return Denotation::from_sexpr(read_one(text)); }

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

ToyModel random_model(std::size_t buckets, std::uint64_t seed, double scale = 0.3) {
  ToyModel m(buckets);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, scale);
  for (auto& w : m.weights()) w = nd(rng);
  return m;
}

}  // namespace

TEST_CASE("executor on an inline single-entity KB") {
  const MiniKB kb = MiniKB::parse("(entity \"red apple\" (attr \"weight\" \"2\"))");
  CHECK(execute(read_one("(count (find \"red apple\"))"), kb) == Denotation::number(1));
  CHECK(execute(read_one("(find \"no such thing\")"), kb) == Denotation::set({}));
  CHECK(execute(read_one("(count (find \"no such thing\"))"), kb) == Denotation::number(0));
  CHECK(execute(read_one("(attr \"weight\" (find \"red apple\"))"), kb) == Denotation::number(2));
}

TEST_CASE("executor on the fixture KB") {
  auto f = testing::g0();
  const MiniKB& kb = *f.kb;
  auto run = [&](const char* lf) { return execute(read_one(lf), kb); };
  CHECK(run("(count (find \"red apple\"))") == Denotation::number(3));
  CHECK(run("(count (find \"red apple\") (find \"red pear\"))") == Denotation::number(5));
  CHECK(run("(attr \"weight\" (find \"green apple\"))") == Denotation::number(9));
  CHECK(run("(filter-num (find \"red apple\") \"weight\" > \"1\")") == den("(set \"red apple#2\" \"red apple#3\")"));
  CHECK(run("(filter-num (find \"red apple\") \"weight\" <= 2)") == den("(set \"red apple\" \"red apple#2\")"));
  CHECK(run("(filter-num (find \"red apple\") \"weight\" > \".\")") == Denotation::set({}));
  CHECK(run("(relate (find \"red apple\") \"next-to\" forward)") == den("(set \"red pear\")"));
  CHECK(run("(relate (find \"yellow banana\") \"next-to\" backward)") == den("(set \"green apple\")"));
  CHECK(run("(exists (intersect (find \"red apple\") (find \"red pear\")))") == Denotation::boolean(false));
  CHECK(run("(count (union (find \"red pear\") (find \"red pear\")))") == Denotation::number(2));
  CHECK_THROWS_AS(run("(frob (find \"x\"))"), ExecutionError);
  CHECK_THROWS_AS(run("(count)"), ExecutionError);
  CHECK_THROWS_AS(run("(filter-num (find \"x\") \"weight\" ~ 1)"), ExecutionError);
  CHECK_THROWS_AS(run("(count \"x\")"), ExecutionError);
}

TEST_CASE("KB construction") {
  CHECK_THROWS_AS(MiniKB::parse("(entity \"a\")\n(entity \"a\")"), ParseError);
  CHECK_THROWS_AS(MiniKB::parse("(entity \"a\")\n(triple \"a\" \"r\" \"b\")"), ParseError);
  MiniKB direct;
  direct.add_entity({"a", {}});
  CHECK_THROWS_AS(direct.add_entity({"a", {}}), std::invalid_argument);
  CHECK_THROWS_AS(direct.add_triple({"a", "r", "b"}), std::invalid_argument);
  CHECK_THROWS_AS(MiniKB::parse("(thing \"a\")"), ParseError);
  const MiniKB kb = MiniKB::parse("(entity \"a\" (attr \"k\" \"v\"))\n(entity \"b\")\n(triple \"a\" \"r\" \"b\")");
  CHECK(kb.find("a")->attr("k") == std::optional<std::string>("v"));
  CHECK_FALSE(kb.find("a")->attr("z").has_value());
  CHECK(kb.find("c") == nullptr);
  CHECK(kb.triples().size() == 1);
}

TEST_CASE("denotations") {
  for (const char* t : {"(number 3)", "(number 2.5)", "(string \"x y\")", "(set \"a\" \"b\")", "(set)", "(bool true)"})
    CHECK(print(den(t).to_sexpr()) == t);
  CHECK(den("(set \"b\" \"a\")") == den("(set \"a\" \"b\")"));
  CHECK(Denotation::number(1.0) == Denotation::number(1.0 + 1e-12));
  CHECK(Denotation::number(1.0) != Denotation::number(1.001));
  CHECK(Denotation::number(0) != Denotation::set({}));
  CHECK_THROWS_AS(den("(integer 3)"), ParseError);
}

TEST_CASE("datasets") {
  const auto ex = parse_dataset("; c\n(example \"a b\" (gold-denotation (number 3)))\n\n(example \"c\" (gold-actions 0 1 18))\n");
  REQUIRE(ex.size() == 2);
  CHECK(ex[0].utterance == "a b");
  CHECK(*ex[0].gold_denotation == Denotation::number(3));
  CHECK_FALSE(ex[0].gold_actions.has_value());
  CHECK(*ex[1].gold_actions == std::vector<ActionId>{0, 1, 18});
  CHECK_THROWS_AS(parse_dataset("(example \"a\" (gold-actions x))"), ParseError);
  CHECK_THROWS_AS(parse_dataset("(example \"a\")"), ParseError);
  CHECK(load_dataset(testing::fixture("g0_weak_train.data")).size() == 44);
  CHECK(load_dataset(testing::fixture("g0_weak_val.data")).size() == 12);
  CHECK(load_dataset(testing::fixture("g0_strong.data")).size() == 4);
}

TEST_CASE("consistency") {
  auto f = testing::g0();
  ParserEnv env(*f.grammar, f.candidates.get(), *f.kb);
  CHECK(*env.denotation(kCountRedApple) == Denotation::number(3));
  CHECK(env.consistency(kCountRedApple, Denotation::number(3)) == 1);
  CHECK(env.consistency(kCountRedApple, Denotation::number(4)) == 0);
  // A spurious form: counting the same set twice gives the same number.
  CHECK(env.consistency(kCountRedAppleTwice, Denotation::number(3)) == 1);
  CHECK_THROWS_AS(env.denotation({0, 1, 6}), IncompleteStateError);
  // Replay is unchecked, so ill-typed sequences fail at execution instead.
  CHECK_FALSE(env.denotation({0, 3, 18}).has_value());
}

TEST_CASE("the generated gold denotations are reachable through the C++ executor") {
  // The data files come from an executor written separately in Python.
  auto f = testing::g0();
  ParserEnv env(*f.grammar, f.candidates.get(), *f.kb);
  ActionConstraints ac(*f.grammar, f.candidates.get());
  std::vector<Denotation> reachable;
  for (const auto& s : enumerate_complete(ac, Constraint::hybr, 9))
    if (auto d = env.denotation(s.actions())) reachable.push_back(*d);
  for (const char* file : {"g0_weak_train.data", "g0_weak_val.data"})
    for (const auto& ex : load_dataset(testing::fixture(file)))
      CHECK_MESSAGE(std::find(reachable.begin(), reachable.end(), *ex.gold_denotation) != reachable.end(),
                    ex.utterance);
  for (const auto& ex : load_dataset(testing::fixture("g0_strong.data"))) {
    const IRState s = replay(*f.grammar, *ex.gold_actions);
    CHECK(s.is_complete());
    CHECK(env.denotation(*ex.gold_actions).has_value());
  }
}

TEST_CASE("features and the log-linear scorer") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  const ToyModel m = random_model(64, 1);
  LogLinearScorer sc(g, m);
  const IRState s = replay(g, {0, 1});
  const auto lp = sc.score("how many red apple", s);
  REQUIRE(lp.size() == g.num_actions());
  double total = 0.0;
  for (double v : lp) total += std::exp(v);
  CHECK(total == doctest::Approx(1.0));
  CHECK(sc.sequence_log_prob("x", kCountRedApple) ==
        doctest::Approx(oracle::sequence_logprob(g, sc, "x", kCountRedApple)));
  FeatureExtractor fx(g, 64);
  const auto feats = fx.features(utterance_words("Red  apple"), s);
  REQUIRE(feats.size() == g.num_actions());
  for (const auto& per_action : feats)
    for (auto b : per_action) CHECK(b < 64);
  CHECK(utterance_words("How  many\tRED") == std::vector<std::string>{"how", "many", "red"});
  // Zero weights give a uniform distribution.
  const ToyModel zero(64);
  LogLinearScorer flat(g, zero);
  const auto u = flat.score("anything", s);
  CHECK(u[0] == doctest::Approx(-std::log(19.0)));
}

TEST_CASE("model serialization round-trips exactly") {
  const ToyModel m = random_model(50, 2);
  const ToyModel back = ToyModel::parse(m.serialize());
  CHECK(back.weights() == m.weights());
  CHECK(m.serialize().rfind("toy-model 50\n", 0) == 0);
  CHECK_THROWS_AS(ToyModel::parse("toy-model 2\n1\n"), ParseError);
}

TEST_CASE("MML objective") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  const ToyModel m = random_model(128, 3);
  LogLinearScorer sc(g, m);
  const std::string x = "how many red apple are there";
  const double p = oracle::sequence_logprob(g, sc, x, kCountRedApple);
  const double q = oracle::sequence_logprob(g, sc, x, kWeightGreenApple);
  const std::vector<WeakTerm> one{{x, {kCountRedApple}}};
  CHECK(mml_objective(g, m, one) == doctest::Approx(p));
  const std::vector<WeakTerm> two{{x, {kCountRedApple, kWeightGreenApple}}};
  CHECK(mml_objective(g, m, two) == doctest::Approx(std::log(std::exp(p) + std::exp(q))));
  std::size_t skipped = 0;
  const std::vector<WeakTerm> mixed{{x, {kCountRedApple}}, {x, {}}};
  CHECK(mml_objective(g, m, mixed, &skipped) == doctest::Approx(p));
  CHECK(skipped == 1);

  // Exhaustive search set: the marginal over every complete sequence.
  ActionConstraints ac(g, f.candidates.get());
  WeakTerm all{x, {}};
  std::vector<double> lps;
  for (const auto& s : enumerate_complete(ac, Constraint::hybr, 7)) {
    all.consistent.push_back(s.actions());
    lps.push_back(oracle::sequence_logprob(g, sc, x, s.actions()));
  }
  CHECK(mml_objective(g, m, std::vector<WeakTerm>{all}) == doctest::Approx(log_sum_exp(lps)).epsilon(1e-12));
}

TEST_CASE("MML gradient") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  const ToyModel m = random_model(50, 4);
  LogLinearScorer sc(g, m);
  const std::string x = "total weight of the green apple";

  const WeakTerm single{x, {kWeightGreenApple}};
  const MmlGradient gs = mml_gradient(g, m, single);
  std::vector<double> plain(50, 0.0);
  sc.accumulate_gradient(x, kWeightGreenApple, 1.0, plain);
  CHECK(gs.has_consistent);
  REQUIRE(gs.posterior.size() == 1);
  CHECK(gs.posterior[0] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < 50; ++i) CHECK(gs.grad[i] == doctest::Approx(plain[i]));

  const ToyModel zero(50);
  const MmlGradient sym = mml_gradient(g, zero, {x, {kCountRedApple, {0, 1, 7, 8, 18, 18}}});
  REQUIRE(sym.posterior.size() == 2);
  CHECK(sym.posterior[0] == doctest::Approx(0.5));
  CHECK(sym.posterior[1] == doctest::Approx(0.5));

  const MmlGradient none = mml_gradient(g, m, {x, {}});
  CHECK_FALSE(none.has_consistent);
  CHECK(std::all_of(none.grad.begin(), none.grad.end(), [](double v) { return v == 0.0; }));

  // Central differences.
  const WeakTerm term{x, {kCountRedApple, kWeightGreenApple, kCountRedAppleTwice}};
  const auto analytic = mml_gradient(g, m, term).grad;
  const std::vector<WeakTerm> terms{term};
  for (std::size_t i = 0; i < 50; ++i) {
    ToyModel a = m, b = m;
    a.weights()[i] += 1e-5;
    b.weights()[i] -= 1e-5;
    const double numeric = (mml_objective(g, a, terms) - mml_objective(g, b, terms)) / 2e-5;
    CHECK(analytic[i] == doctest::Approx(numeric).epsilon(1e-5).scale(1e-3));
  }
}

TEST_CASE("maximize step") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  ToyModel m = random_model(256, 5);
  const std::vector<WeakTerm> terms{{"how many red apple are there", {kCountRedApple}}};
  const auto before = m.weights();
  maximize_step(g, m, terms, 0, 0.1);
  CHECK(m.weights() == before);
  const double obj = mml_objective(g, m, terms);
  const StepStats st = maximize_step(g, m, terms, 1, 1e-3);
  CHECK(st.updates == 1);
  CHECK(mml_objective(g, m, terms) - obj >= -1e-9);
  const std::vector<WeakTerm> empty{{"x", {}}};
  CHECK(maximize_step(g, m, empty, 3, 0.1).skipped == 3);
}

TEST_CASE("strong training") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  ParserEnv env(g, f.candidates.get(), *f.kb);

  auto strong = load_dataset(testing::fixture("g0_strong.data"));
  strong.push_back({"how many green apple are there", std::vector<ActionId>{0, 1, 7, 8, 18, 18}, std::nullopt});
  REQUIRE(strong.size() == 5);
  ToyModel m;
  train_strong(env, m, strong, 200, 0.1);
  DecodeConfig cfg;
  for (const auto& ex : strong)
    CHECK(env.decoder().greedy_decode(LogLinearScorer(g, m), ex.utterance, cfg).state.actions() == *ex.gold_actions);

  ToyModel untouched = random_model(64, 6);
  const auto w = untouched.weights();
  train_strong(env, untouched, {}, 10, 0.1);
  CHECK(untouched.weights() == w);

  // "the" is not a candidate entity.
  const std::vector<Example> bad{strong[0], {"x", std::vector<ActionId>{0, 1, 17, 18, 18}, std::nullopt}};
  CHECK_THROWS_AS(train_strong(env, untouched, bad, 1, 0.1), GoldSequenceError);
  CHECK(untouched.weights() == w);

  // Small steps on one example lower the loss every time.
  ToyModel one = random_model(256, 7);
  const std::vector<Example> single{strong[0]};
  LogLinearScorer sc(g, one);
  double prev = sc.sequence_log_prob(strong[0].utterance, *strong[0].gold_actions);
  for (int i = 0; i < 10; ++i) {
    train_strong(env, one, single, 1, 1e-3);
    const double cur = sc.sequence_log_prob(strong[0].utterance, *strong[0].gold_actions);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("search step") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  ParserEnv env(g, f.candidates.get(), *f.kb);
  const auto weak = load_dataset(testing::fixture("g0_weak_train.data"));
  const ToyModel zero;
  const SearchResult hybr = search_step(env, zero, weak, 8, Constraint::hybr);
  const SearchResult none = search_step(env, zero, weak, 8, Constraint::none);
  CHECK(hybr.oracle_accuracy > none.oracle_accuracy);
  REQUIRE(hybr.terms.size() == weak.size());
  for (std::size_t i = 0; i < weak.size(); ++i)
    for (const auto& seq : hybr.terms[i].consistent) CHECK(env.consistency(seq, *weak[i].gold_denotation) == 1);

  const std::vector<Example> impossible{{"x", std::nullopt, Denotation::number(1234)}};
  const SearchResult r = search_step(env, zero, impossible, 8, Constraint::hybr);
  CHECK(r.terms[0].consistent.empty());
  CHECK(r.oracle_accuracy == 0.0);

  // With a beam that never prunes, the oracle accuracy is the exhaustive one.
  ActionConstraints ac(g, f.candidates.get());
  std::vector<Denotation> reachable;
  for (const auto& s : enumerate_complete(ac, Constraint::hybr, 6))
    if (auto d = env.denotation(s.actions())) reachable.push_back(*d);
  std::size_t hits = 0;
  for (const auto& ex : weak) hits += std::find(reachable.begin(), reachable.end(), *ex.gold_denotation) != reachable.end();
  const SearchResult wide = search_step(env, zero, weak, 1000, Constraint::hybr, 6);
  CHECK(wide.oracle_accuracy == doctest::Approx(static_cast<double>(hits) / static_cast<double>(weak.size())));
}

TEST_CASE("weakly supervised loop is deterministic and improves") {
  auto f = testing::g0();
  ParserEnv env(*f.grammar, f.candidates.get(), *f.kb);
  const auto strong = load_dataset(testing::fixture("g0_strong.data"));
  const auto weak = load_dataset(testing::fixture("g0_weak_train.data"));
  const auto val = load_dataset(testing::fixture("g0_weak_val.data"));
  WeakSupConfig cfg;
  cfg.cycles = 4;
  ToyModel a, b;
  const auto ra = train_weaksup(env, a, strong, weak, val, cfg);
  const auto rb = train_weaksup(env, b, strong, weak, val, cfg);
  REQUIRE(ra.size() == 5);
  CHECK(ra.front().cycle == 0);
  CHECK(a.weights() == b.weights());
  for (std::size_t i = 0; i < ra.size(); ++i) CHECK(ra[i].validation_accuracy == rb[i].validation_accuracy);
  CHECK(ra.back().validation_accuracy >= ra.front().validation_accuracy);
}
