#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cgdec/grammar.hpp"
#include "cgdec/vocab.hpp"

namespace cgdec {

// Token-sequence store. Node 0 is the root.
class Trie {
 public:
  struct Node {
    std::vector<std::pair<TokenId, std::uint32_t>> children;  // sorted by token
    bool terminal = false;
  };

  Trie() : nodes_(1) {}

  // Returns false when the sequence was already stored.
  bool insert(std::span<const TokenId> tokens);
  // Node reached by `prefix`, or nullopt when it is not a stored prefix.
  std::optional<std::uint32_t> find(std::span<const TokenId> prefix) const;
  const Node& node(std::uint32_t id) const { return nodes_[id]; }

  // Both throw std::out_of_range when `prefix` is not a stored prefix.
  std::vector<TokenId> valid_next_tokens(std::span<const TokenId> prefix) const;
  bool is_complete_candidate(std::span<const TokenId> prefix) const;

  std::size_t num_nodes() const { return nodes_.size(); }
  std::size_t num_sequences() const { return sequences_; }
  bool empty() const { return sequences_ == 0; }
  // Every stored sequence in lexicographic token-id order.
  std::vector<std::vector<TokenId>> sequences() const;

  bool operator==(const Trie& other) const;

 private:
  std::vector<Node> nodes_;
  std::size_t sequences_ = 0;
};

struct CandidateSet {
  std::string node_class;
  std::vector<std::string> expressions;
};

struct TokenizeOptions {
  // Lower-cases expression words before vocabulary lookup.
  bool fold_case = false;
};

class UntokenizableError : public std::invalid_argument {
 public:
  UntokenizableError(std::string word, std::string expression)
      : std::invalid_argument("word '" + word + "' of candidate \"" + expression + "\" is not in the vocabulary"),
        word_(std::move(word)),
        expression_(std::move(expression)) {}
  const std::string& word() const { return word_; }
  const std::string& expression() const { return expression_; }

 private:
  std::string word_;
  std::string expression_;
};

// Whitespace split followed by vocabulary lookup.
std::vector<TokenId> tokenize_candidate(std::string_view expression, const Vocabulary& vocab,
                                        const TokenizeOptions& opts = {});

// Duplicate tokenizations are dropped; one warning per duplicate is appended
// to `warnings` when given.
Trie build_trie(const CandidateSet& cs, const Vocabulary& vocab, const TokenizeOptions& opts = {},
                std::vector<std::string>* warnings = nullptr);

// .cand text: "#class <name>" headers, each followed by one expression per
// line. Blank lines are skipped.
std::vector<CandidateSet> parse_candidate_file(std::string_view text);
std::vector<CandidateSet> load_candidate_file(const std::string& path);

// One trie per candidate-bearing node class of one domain.
class CandidateIndex {
 public:
  CandidateIndex() = default;
  // Throws std::invalid_argument for a set naming an unknown class or a class
  // without arg-candidate, and UntokenizableError for OOV words.
  static CandidateIndex build(const Grammar& g, const std::vector<CandidateSet>& sets,
                              const TokenizeOptions& opts = {}, std::vector<std::string>* warnings = nullptr);

  // Null when the class has no candidates at all.
  const Trie* trie_for(ClassId c) const;
  // Candidate-bearing classes that received no expression.
  std::vector<ClassId> empty_classes(const Grammar& g) const;

 private:
  std::vector<std::optional<Trie>> tries_;
};

struct ManifestEntry {
  std::string domain;
  std::string node_class;
  std::string path;
};

// Lines "<domain> <class> <path>"; '#' starts a comment line. Relative paths
// are resolved against `base_dir`.
std::vector<ManifestEntry> parse_manifest(std::string_view text, const std::string& base_dir = "");

// Loads the candidate sets of one domain. Files may hold several classes; only
// the class named by each entry is taken from its file.
std::vector<CandidateSet> load_domain_candidates(const std::vector<ManifestEntry>& manifest, const std::string& domain);

}  // namespace cgdec
