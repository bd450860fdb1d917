#include <cmath>
#include <limits>
#include <random>

#include "cgdec/decode.hpp"
#include "cgdec/logical_form.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cgdec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

class WrongLength : public Scorer {
 public:
  std::vector<double> score(const Utterance&, const IRState&) const override { return {0.0}; }
};

TableScorer random_table(const Grammar& g, const oracle::ValidActions& va, std::uint64_t seed, std::size_t depth) {
  TableScorer t(g.num_actions());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.5);
  std::function<void(const IRState&, std::vector<ActionId>&)> go = [&](const IRState& s, std::vector<ActionId>& p) {
    for (ActionId a = 0; a < static_cast<ActionId>(g.num_actions()); ++a) t.set(p, a, nd(rng));
    if (s.is_complete() || p.size() >= depth) return;
    for (ActionId a : va.valid_set(s, oracle::Kind::hybr)) {
      p.push_back(a);
      go(s.apply(a), p);
      p.pop_back();
    }
  };
  std::vector<ActionId> p;
  go(IRState::initial(g), p);
  return t;
}

}  // namespace

TEST_CASE("log_softmax and prefix hashing") {
  const std::vector<double> raw{1.0, 2.0, 3.0};
  const auto lp = log_softmax(raw);
  double total = 0.0;
  for (double v : lp) total += std::exp(v);
  CHECK(total == doctest::Approx(1.0));
  CHECK(lp[2] - lp[1] == doctest::Approx(1.0));
  CHECK(prefix_hash(std::vector<ActionId>{}) != prefix_hash(std::vector<ActionId>{0}));
  CHECK(prefix_hash(std::vector<ActionId>{1, 2}) != prefix_hash(std::vector<ActionId>{2, 1}));
}

TEST_CASE("table scorer file format") {
  const TableScorer t = TableScorer::parse("# header\n -> 3 2.5\n0 1 -> 6 1.0  # trailing\n\n", 19);
  auto f = testing::g0();
  const auto root = t.score("", IRState::initial(*f.grammar));
  CHECK(root[3] - root[0] == doctest::Approx(2.5));
  const auto inner = t.score("", replay(*f.grammar, {0, 1}));
  CHECK(inner[6] - inner[7] == doctest::Approx(1.0));
  CHECK_THROWS_AS(TableScorer::parse("0 -> 99 1.0\n", 19), ParseError);
  CHECK_THROWS_AS(TableScorer::parse("0 1 2\n", 19), ParseError);
  CHECK_THROWS_AS(TableScorer::parse("x -> 1 1\n", 19), ParseError);
}

TEST_CASE("constrained scores") {
  auto f = testing::kqa();
  const Grammar& g = *f.grammar;
  Decoder dec(g, f.candidates.get());
  UniformScorer u(g.num_actions());
  const auto all = dec.constrained_scores(u, IRState::initial(g), "", Constraint::none);
  CHECK(std::all_of(all.begin(), all.end(), [&](double v) { return v == all[0]; }));

  auto rule = [&](const char* n) { return *g.rule_action(n); };
  auto tok = [&](const char* w) { return g.token_action(*g.vocabulary().find(w)); };
  const IRState s = replay(g, {rule("query-rel-qualifier"), rule("find"), rule("keyword-entity"), tok("Paris"),
                               g.reduce_action(), rule("keyword-relation"), tok("country")});
  const auto scores = dec.constrained_scores(u, s, "", Constraint::hybr);
  for (ActionId a = 0; a < static_cast<ActionId>(g.num_actions()); ++a)
    CHECK(std::isfinite(scores[static_cast<std::size_t>(a)]) == (a == tok("of") || a == tok("for")));
  CHECK_THROWS_AS(dec.constrained_scores(WrongLength(), s, "", Constraint::hybr), std::invalid_argument);
}

TEST_CASE("greedy decoding follows a crafted table") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  Decoder dec(g, f.candidates.get());
  TableScorer t(g.num_actions());
  const std::vector<ActionId> gold{0, 1, 6, 8, 18, 18};
  for (std::size_t i = 0; i < gold.size(); ++i)
    t.set(std::span<const ActionId>(gold.data(), i), gold[i], 5.0);
  const Hypothesis h = dec.greedy_decode(t, "", DecodeConfig{});
  CHECK(h.finished);
  CHECK(h.state.actions() == gold);
  CHECK(print(to_logical_form(h.state)) == "(count (find \"red apple\"))");
  CHECK(h.logprob == doctest::Approx(oracle::sequence_logprob(g, t, "", gold)));
}

TEST_CASE("greedy ties go to the lowest valid id") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  Decoder dec(g, f.candidates.get());
  oracle::ValidActions va(g, oracle::candidate_table(g, load_candidate_file(testing::fixture("g0.cand"))));
  std::vector<ActionId> want;
  IRState s = IRState::initial(g);
  while (!s.is_complete()) {
    want.push_back(va.valid_set(s, oracle::Kind::hybr).front());
    s = s.apply(want.back());
  }
  UniformScorer u(g.num_actions());
  const Hypothesis a = dec.greedy_decode(u, "", DecodeConfig{});
  const Hypothesis b = dec.greedy_decode(u, "", DecodeConfig{});
  CHECK(a.state.actions() == want);
  CHECK(a.state.actions() == b.state.actions());
  CHECK(a.logprob == b.logprob);
}

TEST_CASE("step budget") {
  auto f = testing::g0();
  Decoder dec(*f.grammar, f.candidates.get());
  UniformScorer u(f.grammar->num_actions());
  DecodeConfig cfg;
  cfg.max_steps = 1;
  const Hypothesis h = dec.greedy_decode(u, "", cfg);
  CHECK_FALSE(h.finished);
  CHECK(h.state.length() == 1);
  cfg.strategy = SearchStrategy::beam;
  cfg.beam = 4;
  const auto hyps = dec.beam_search(u, "", cfg);
  REQUIRE(hyps.size() == 1);
  CHECK_FALSE(hyps[0].finished);
  cfg.beam = 0;
  CHECK_THROWS_AS(dec.beam_search(u, "", cfg), std::invalid_argument);
}

TEST_CASE("beam of one equals greedy") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  Decoder dec(g, f.candidates.get());
  oracle::ValidActions va(g, oracle::candidate_table(g, load_candidate_file(testing::fixture("g0.cand"))));
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const TableScorer t = random_table(g, va, seed, 7);
    DecodeConfig cfg;
    const Hypothesis greedy = dec.greedy_decode(t, "", cfg);
    cfg.strategy = SearchStrategy::beam;
    cfg.beam = 1;
    const auto beam = dec.decode(t, "", cfg);
    REQUIRE(beam.size() == 1);
    CHECK(beam[0].state.actions() == greedy.state.actions());
    CHECK(beam[0].logprob == greedy.logprob);
  }
}

TEST_CASE("beam output is ranked and bounded") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  Decoder dec(g, f.candidates.get());
  oracle::ValidActions va(g, oracle::candidate_table(g, load_candidate_file(testing::fixture("g0.cand"))));
  const TableScorer t = random_table(g, va, 9, 8);
  DecodeConfig cfg;
  cfg.strategy = SearchStrategy::beam;
  cfg.beam = 5;
  cfg.max_steps = 12;
  const auto hyps = dec.beam_search(t, "", cfg);
  REQUIRE(!hyps.empty());
  CHECK(hyps.size() <= 5);
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    CHECK(hyps[i].finished);
    CHECK(hyps[i].logprob == doctest::Approx(oracle::sequence_logprob(g, t, "", hyps[i].state.actions())));
    if (i) CHECK(hyps[i - 1].logprob >= hyps[i].logprob);
  }
  CHECK(hyps[0].logprob > -kInf);
}

TEST_CASE("beam matches exhaustive ranking") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  Decoder dec(g, f.candidates.get());
  oracle::ValidActions va(g, oracle::candidate_table(g, load_candidate_file(testing::fixture("g0.cand"))));
  const auto seqs = oracle::complete_sequences(g, va, oracle::Kind::hybr, 6);
  REQUIRE(seqs.size() == 9);
  const TableScorer t = random_table(g, va, 11, 6);
  std::vector<std::pair<double, std::vector<ActionId>>> ranked;
  for (const auto& s : seqs) ranked.emplace_back(oracle::sequence_logprob(g, t, "", s), s);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  DecodeConfig cfg;
  cfg.strategy = SearchStrategy::beam;
  cfg.beam = 400;
  cfg.max_steps = 6;
  const auto hyps = dec.beam_search(t, "", cfg);
  REQUIRE(hyps.size() == ranked.size());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    CHECK(hyps[i].state.actions() == ranked[i].second);
    CHECK(hyps[i].logprob == doctest::Approx(ranked[i].first).epsilon(1e-12));
  }
}
