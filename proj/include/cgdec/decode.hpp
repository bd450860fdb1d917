#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cgdec/constrain.hpp"

namespace cgdec {

using Utterance = std::string;

// log p(a | prefix, x) over the whole action inventory.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> score(const Utterance& x, const IRState& s) const = 0;
};

class UniformScorer : public Scorer {
 public:
  explicit UniformScorer(std::size_t num_actions) : n_(num_actions) {}
  std::vector<double> score(const Utterance& x, const IRState& s) const override;

 private:
  std::size_t n_;
};

std::uint64_t prefix_hash(std::span<const ActionId> prefix);
std::vector<double> log_softmax(std::span<const double> raw);

// Raw scores per (prefix hash, action), 0 when absent, normalized with a log
// softmax over the inventory. The utterance is ignored.
class TableScorer : public Scorer {
 public:
  explicit TableScorer(std::size_t num_actions) : n_(num_actions) {}
  void set(std::span<const ActionId> prefix, ActionId a, double raw);
  std::vector<double> score(const Utterance& x, const IRState& s) const override;

  // Lines "<prefix ids...> -> <action> <raw score>"; '#' starts a comment.
  static TableScorer parse(std::string_view text, std::size_t num_actions);
  static TableScorer load(const std::string& path, std::size_t num_actions);

 private:
  std::size_t n_;
  std::unordered_map<std::uint64_t, std::unordered_map<ActionId, double>> table_;
};

struct Hypothesis {
  IRState state;
  double logprob = 0.0;
  bool finished = false;
};

enum class SearchStrategy { greedy, beam };

struct DecodeConfig {
  Constraint constraint = Constraint::hybr;
  SearchStrategy strategy = SearchStrategy::greedy;
  std::size_t beam = 1;
  std::size_t max_steps = 100;
};

class Decoder {
 public:
  Decoder(const Grammar& g, const CandidateIndex* candidates);

  const ActionConstraints& constraints() const { return constraints_; }
  MaskCache& cache() const { return *cache_; }

  // Scorer output plus the mask for `c`. Throws std::invalid_argument when the
  // scorer returns the wrong length.
  std::vector<double> constrained_scores(const Scorer& scorer, const IRState& s, const Utterance& x,
                                         Constraint c) const;

  // Argmax per step, lowest action id on ties. A dead end or an exhausted
  // step budget returns the current hypothesis with finished = false.
  Hypothesis greedy_decode(const Scorer& scorer, const Utterance& x, const DecodeConfig& cfg) const;

  // Finished hypotheses, at most cfg.beam, sorted by logprob descending then
  // by action sequence. When none finished, the single best unfinished one.
  std::vector<Hypothesis> beam_search(const Scorer& scorer, const Utterance& x, const DecodeConfig& cfg) const;

  std::vector<Hypothesis> decode(const Scorer& scorer, const Utterance& x, const DecodeConfig& cfg) const;

 private:
  ActionConstraints constraints_;
  std::unique_ptr<MaskCache> cache_;
};

}  // namespace cgdec
