#include "cgdec/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace cgdec {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv(std::uint64_t h, std::string_view s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= kFnvPrime;
  }
  h ^= 0xff;  // field separator
  h *= kFnvPrime;
  return h;
}

std::uint64_t fnv_int(std::uint64_t h, std::int64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= static_cast<std::uint64_t>(v >> (8 * i)) & 0xffu;
    h *= kFnvPrime;
  }
  return h;
}

// Final avalanche so that nearby hashes spread across buckets.
std::uint64_t finish(std::uint64_t h) {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return h;
}

}  // namespace

std::string ToyModel::serialize() const {
  std::string out = "toy-model " + std::to_string(weights_.size()) + "\n";
  char buf[40];
  for (double w : weights_) {
    std::snprintf(buf, sizeof buf, "%.17g\n", w);
    out += buf;
  }
  return out;
}

ToyModel ToyModel::parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string magic;
  std::size_t n = 0;
  if (!(in >> magic >> n) || magic != "toy-model" || n == 0) throw ParseError("expected 'toy-model <buckets>'", {1, 1});
  ToyModel m(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string tok;
    if (!(in >> tok)) throw ParseError("model file ends after " + std::to_string(i) + " weights", {static_cast<int>(i) + 2, 1});
    try {
      std::size_t used = 0;
      m.weights_[i] = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(m.weights_[i])) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError("bad weight '" + tok + "'", {static_cast<int>(i) + 2, 1});
    }
  }
  std::string extra;
  if (in >> extra) throw ParseError("trailing data after weights", {static_cast<int>(n) + 2, 1});
  return m;
}

ToyModel ToyModel::load(const std::string& path) { return parse(read_file(path)); }

void ToyModel::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << serialize();
}

std::vector<std::string> utterance_words(const Utterance& x) {
  std::vector<std::string> words;
  std::istringstream in(x);
  std::string w;
  while (in >> w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    words.push_back(w);
  }
  return words;
}

std::vector<std::vector<std::uint32_t>> FeatureExtractor::features(const std::vector<std::string>& words,
                                                                   const IRState& s) const {
  const Grammar& g = *grammar_;
  const std::size_t n = g.num_actions();

  // Context hashes shared by every action at this state.
  const std::int64_t prev = s.last_action() ? *s.last_action() : -1;
  std::int64_t slot_class = -2, slot_pos = -1;
  if (auto nt = s.leftmost_nonterminal()) {
    slot_class = nt->owner;
    slot_pos = nt->position;
  }
  std::vector<std::uint64_t> ctx;
  ctx.push_back(fnv(kFnvOffset, "bias"));
  ctx.push_back(fnv_int(fnv(kFnvOffset, "prev"), prev));
  const std::uint64_t slot = fnv_int(fnv_int(fnv(kFnvOffset, "slot"), slot_class), slot_pos);
  ctx.push_back(slot);
  for (const auto& w : words) {
    const std::uint64_t hw = fnv(fnv(kFnvOffset, "w"), w);
    ctx.push_back(hw);
    ctx.push_back(fnv_int(fnv(hw, "prev"), prev));
    ctx.push_back(fnv_int(fnv_int(fnv(hw, "slot"), slot_class), slot_pos));
  }
  const std::uint32_t copy_bucket = static_cast<std::uint32_t>(finish(fnv(kFnvOffset, "copy")) % buckets_);
  const std::uint32_t copy_slot_bucket = static_cast<std::uint32_t>(finish(fnv(slot, "copy")) % buckets_);

  std::vector<std::vector<std::uint32_t>> out(n);
  for (std::size_t a = 0; a < n; ++a) {
    auto& f = out[a];
    f.reserve(ctx.size() + 2);
    for (std::uint64_t c : ctx) f.push_back(static_cast<std::uint32_t>(finish(fnv_int(c, static_cast<std::int64_t>(a))) % buckets_));
    const Action& act = g.action(static_cast<ActionId>(a));
    if (act.kind == ActionKind::nl_token) {
      std::string tok = g.vocabulary().token(act.token);
      std::transform(tok.begin(), tok.end(), tok.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      if (std::find(words.begin(), words.end(), tok) != words.end()) {
        f.push_back(copy_bucket);
        f.push_back(copy_slot_bucket);
      }
    }
  }
  return out;
}

std::vector<double> LogLinearScorer::score(const Utterance& x, const IRState& s) const {
  const auto feats = fx_.features(utterance_words(x), s);
  const auto& w = model_->weights();
  std::vector<double> raw(feats.size(), 0.0);
  for (std::size_t a = 0; a < feats.size(); ++a)
    for (std::uint32_t b : feats[a]) raw[a] += w[b];
  return log_softmax(raw);
}

double LogLinearScorer::sequence_log_prob(const Utterance& x, const std::vector<ActionId>& actions) const {
  IRState s = IRState::initial(*grammar_);
  double lp = 0.0;
  for (ActionId a : actions) {
    lp += score(x, s)[static_cast<std::size_t>(a)];
    s = s.apply(a, ApplyCheck::none);
  }
  return lp;
}

void LogLinearScorer::accumulate_gradient(const Utterance& x, const std::vector<ActionId>& actions, double weight,
                                          std::vector<double>& grad) const {
  if (grad.size() != model_->size()) throw std::invalid_argument("gradient size does not match the model");
  const auto words = utterance_words(x);
  const auto& w = model_->weights();
  IRState s = IRState::initial(*grammar_);
  for (ActionId gold : actions) {
    const auto feats = fx_.features(words, s);
    std::vector<double> raw(feats.size(), 0.0);
    for (std::size_t a = 0; a < feats.size(); ++a)
      for (std::uint32_t b : feats[a]) raw[a] += w[b];
    const std::vector<double> lp = log_softmax(raw);
    // d log p(gold) = phi(gold) - sum_a p(a) phi(a)
    for (std::uint32_t b : feats[static_cast<std::size_t>(gold)]) grad[b] += weight;
    for (std::size_t a = 0; a < feats.size(); ++a) {
      const double p = std::exp(lp[a]);
      for (std::uint32_t b : feats[a]) grad[b] -= weight * p;
    }
    s = s.apply(gold, ApplyCheck::none);
  }
}

}  // namespace cgdec
