#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cgdec/decode.hpp"

namespace cgdec {

// Weights of the log-linear scorer. Each (feature, action) pair is hashed into
// one of `size()` buckets.
class ToyModel {
 public:
  explicit ToyModel(std::size_t num_buckets = 1 << 16) : weights_(num_buckets, 0.0) {}

  std::size_t size() const { return weights_.size(); }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  // "toy-model <n>" then one weight per line, printed with %.17g.
  std::string serialize() const;
  static ToyModel parse(std::string_view text);
  static ToyModel load(const std::string& path);
  void save(const std::string& path) const;

 private:
  std::vector<double> weights_;
};

// Lower-cased whitespace split.
std::vector<std::string> utterance_words(const Utterance& x);

// Bucket indices of the active features of (x, s, a). Repeated indices count
// twice. Features: action bias; word x action; previous action x action;
// word x previous action x action; lmnt slot x action; word x lmnt slot x
// action; and, for nl-token actions, a shared copy feature when the token
// occurs in the utterance.
class FeatureExtractor {
 public:
  FeatureExtractor(const Grammar& g, std::size_t num_buckets) : grammar_(&g), buckets_(num_buckets) {}

  // Features of every action at state s, as one list per action.
  std::vector<std::vector<std::uint32_t>> features(const std::vector<std::string>& words, const IRState& s) const;

 private:
  const Grammar* grammar_;
  std::size_t buckets_;
};

class LogLinearScorer : public Scorer {
 public:
  LogLinearScorer(const Grammar& g, const ToyModel& model) : grammar_(&g), model_(&model), fx_(g, model.size()) {}

  std::vector<double> score(const Utterance& x, const IRState& s) const override;

  // log p(actions | x) under the unmasked distribution.
  double sequence_log_prob(const Utterance& x, const std::vector<ActionId>& actions) const;
  // Adds weight * d/dθ log p(actions | x) to grad.
  void accumulate_gradient(const Utterance& x, const std::vector<ActionId>& actions, double weight,
                           std::vector<double>& grad) const;

 private:
  const Grammar* grammar_;
  const ToyModel* model_;
  FeatureExtractor fx_;
};

}  // namespace cgdec
