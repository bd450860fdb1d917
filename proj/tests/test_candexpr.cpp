#include <set>
#include <string>

#include "cgdec/candexpr.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace cgdec;

namespace {

std::vector<TokenId> toks(const Vocabulary& v, std::initializer_list<const char*> words) {
  std::vector<TokenId> out;
  for (const char* w : words) out.push_back(*v.find(w));
  return out;
}

std::set<TokenId> as_set(const std::vector<TokenId>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("relation trie shares the country prefix") {
  auto f = testing::kqa();
  const Vocabulary& v = f.grammar->vocabulary();
  const Trie t = build_trie({"keyword-relation", {"country of citizenship", "country for sport"}}, v);
  CHECK(t.num_sequences() == 2);
  // root, country, of, citizenship, for, sport
  CHECK(t.num_nodes() == 6);
  CHECK(t.valid_next_tokens({}) == toks(v, {"country"}));
  CHECK(as_set(t.valid_next_tokens(toks(v, {"country"}))) == as_set(toks(v, {"of", "for"})));
  CHECK_FALSE(as_set(t.valid_next_tokens(toks(v, {"country"}))).count(*v.find("with")));
  CHECK(t.valid_next_tokens(toks(v, {"country", "of", "citizenship"})).empty());
  CHECK(t.is_complete_candidate(toks(v, {"country", "for", "sport"})));
  CHECK_FALSE(t.is_complete_candidate(toks(v, {"country", "for"})));
  CHECK_THROWS_AS(t.valid_next_tokens(toks(v, {"country", "with"})), std::out_of_range);
  CHECK_THROWS_AS(t.is_complete_candidate(toks(v, {"sport"})), std::out_of_range);
  CHECK_FALSE(t.find(toks(v, {"with"})).has_value());
}

TEST_CASE("G0 entity trie") {
  auto f = testing::g0();
  const Vocabulary& v = f.grammar->vocabulary();
  const Trie* t = f.candidates->trie_for(*f.grammar->find_class("find"));
  REQUIRE(t != nullptr);
  CHECK(t->num_sequences() == 3);
  // root, red, red apple, red pear, green, green apple
  CHECK(t->num_nodes() == 6);
  CHECK(as_set(t->valid_next_tokens({})) == as_set(toks(v, {"red", "green"})));
  CHECK(t->is_complete_candidate(toks(v, {"red", "apple"})));
  CHECK_FALSE(t->is_complete_candidate(toks(v, {"red"})));
  CHECK_FALSE(t->is_complete_candidate({}));
  CHECK(t->sequences().size() == 3);
}

TEST_CASE("empty trie") {
  const Trie t;
  CHECK(t.empty());
  CHECK(t.valid_next_tokens({}).empty());
  CHECK_FALSE(t.is_complete_candidate({}));
}

TEST_CASE("trie agrees with the prefix filter on every stored prefix") {
  auto f = testing::kqa();
  const auto table = oracle::candidate_table(*f.grammar, load_candidate_file(testing::fixture("kqa_mini.cand")));
  for (const char* cls : {"keyword-relation", "keyword-entity"}) {
    const ClassId c = *f.grammar->find_class(cls);
    const Trie* t = f.candidates->trie_for(c);
    const auto& cands = table[static_cast<std::size_t>(c)];
    for (const auto& cand : cands)
      for (std::size_t k = 0; k <= cand.size(); ++k) {
        const std::vector<TokenId> p(cand.begin(), cand.begin() + static_cast<long>(k));
        CHECK(as_set(t->valid_next_tokens(p)) == oracle::next_tokens(cands, p));
        CHECK(t->is_complete_candidate(p) == oracle::is_candidate(cands, p));
      }
  }
}

TEST_CASE("build_trie is deterministic and drops duplicates") {
  auto f = testing::g0();
  const Vocabulary& v = f.grammar->vocabulary();
  const CandidateSet cs{"find", {"red apple", "green apple", "red  apple", "red pear"}};
  std::vector<std::string> warnings;
  const Trie a = build_trie(cs, v, {}, &warnings);
  CHECK(a == build_trie(cs, v));
  CHECK(a.num_sequences() == 3);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("red  apple") != std::string::npos);
  // Insertion order does not change the structure.
  const CandidateSet reversed{"find", {"red pear", "green apple", "red apple"}};
  CHECK(build_trie(reversed, v).sequences() == a.sequences());
}

TEST_CASE("tokenization") {
  auto f = testing::kqa();
  const Vocabulary& v = f.grammar->vocabulary();
  CHECK(tokenize_candidate("  Tony\tParker ", v) == toks(v, {"Tony", "Parker"}));
  try {
    tokenize_candidate("Tony Blue", v);
    FAIL("expected an error");
  } catch (const UntokenizableError& e) {
    CHECK(e.word() == "Blue");
    CHECK(e.expression() == "Tony Blue");
  }
  CHECK_THROWS_AS(tokenize_candidate("tony parker", v), UntokenizableError);
  auto g = testing::g0();
  TokenizeOptions fold;
  fold.fold_case = true;
  CHECK(tokenize_candidate("Red APPLE", g.grammar->vocabulary(), fold) == toks(g.grammar->vocabulary(), {"red", "apple"}));
}

TEST_CASE("candidate file parsing") {
  const auto sets = parse_candidate_file("#class a\nx y\n\nz\n#class b\nw\n");
  REQUIRE(sets.size() == 2);
  CHECK(sets[0].node_class == "a");
  CHECK(sets[0].expressions == std::vector<std::string>{"x y", "z"});
  CHECK(sets[1].expressions == std::vector<std::string>{"w"});
  CHECK_THROWS_AS(parse_candidate_file("x y\n"), ParseError);
}

TEST_CASE("candidate index") {
  auto f = testing::g0();
  const Grammar& g = *f.grammar;
  CHECK(f.candidates->trie_for(*g.find_class("count")) == nullptr);
  CHECK(f.candidates->empty_classes(g).empty());
  CHECK(CandidateIndex::build(g, {}).empty_classes(g) == std::vector<ClassId>{*g.find_class("find")});
  CHECK_THROWS_AS(CandidateIndex::build(g, {{"count", {"red"}}}), std::invalid_argument);
  CHECK_THROWS_AS(CandidateIndex::build(g, {{"nope", {"red"}}}), std::invalid_argument);
  CHECK_THROWS_AS(CandidateIndex::build(g, load_candidate_file(testing::fixture("g0_oov.cand"))), UntokenizableError);
  std::vector<std::string> warnings;
  CandidateIndex::build(g, load_candidate_file(testing::fixture("g0_dupes.cand")), {}, &warnings);
  CHECK_FALSE(warnings.empty());
}

TEST_CASE("manifest") {
  const auto m = parse_manifest("# comment\ng0 find g0.cand\n\nkqa keyword-entity /abs/k.cand\n", "/base");
  REQUIRE(m.size() == 2);
  CHECK(m[0].domain == "g0");
  CHECK(m[0].node_class == "find");
  CHECK(m[0].path == "/base/g0.cand");
  CHECK(m[1].path == "/abs/k.cand");
  CHECK_THROWS_AS(parse_manifest("g0 find\n"), ParseError);

  const auto full = parse_manifest(read_file(testing::fixture("manifest.txt")), CGDEC_FIXTURES);
  const auto kqa = load_domain_candidates(full, "kqa");
  REQUIRE(kqa.size() == 2);
  CHECK(kqa[0].node_class == "keyword-relation");
  CHECK(kqa[0].expressions.size() == 2);
  CHECK(kqa[1].expressions.size() == 3);
  CHECK(load_domain_candidates(full, "none").empty());
}
