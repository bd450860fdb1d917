#pragma once

#include <memory>
#include <string>

#include "cgdec/candexpr.hpp"
#include "cgdec/grammar.hpp"
#include "cgdec/kb.hpp"

namespace testing {

inline std::string fixture(const std::string& name) { return std::string(CGDEC_FIXTURES) + "/" + name; }

struct Fixture {
  std::unique_ptr<cgdec::Grammar> grammar;
  std::unique_ptr<cgdec::CandidateIndex> candidates;
  std::unique_ptr<cgdec::MiniKB> kb;
};

inline Fixture load_fixture(const std::string& stem, bool subtype_inference = true) {
  Fixture f;
  cgdec::GrammarOptions opts;
  opts.subtype_inference = subtype_inference;
  f.grammar = std::make_unique<cgdec::Grammar>(cgdec::parse_grammar(
      cgdec::read_file(fixture(stem + ".gdsl")), cgdec::Vocabulary::load(fixture(stem + ".vocab")), opts));
  f.candidates = std::make_unique<cgdec::CandidateIndex>(
      cgdec::CandidateIndex::build(*f.grammar, cgdec::load_candidate_file(fixture(stem + ".cand"))));
  if (stem == "g0") f.kb = std::make_unique<cgdec::MiniKB>(cgdec::MiniKB::load(fixture("g0.kb")));
  return f;
}

inline Fixture g0(bool subtype_inference = true) { return load_fixture("g0", subtype_inference); }
inline Fixture kqa(bool subtype_inference = true) { return load_fixture("kqa_mini", subtype_inference); }

}  // namespace testing
