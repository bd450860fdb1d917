#include "cgdec/decode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace cgdec {

namespace {

ApplyCheck check_for(Constraint c) {
  switch (c) {
    case Constraint::none: return ApplyCheck::none;
    case Constraint::type_wu: return ApplyCheck::unified;
    default: return ApplyCheck::typed;
  }
}

void validate(const DecodeConfig& cfg) {
  if (cfg.beam < 1) throw std::invalid_argument("beam size must be at least 1");
  if (cfg.max_steps < 1) throw std::invalid_argument("max_steps must be at least 1");
}

}  // namespace

std::vector<double> UniformScorer::score(const Utterance&, const IRState&) const {
  return std::vector<double>(n_, -std::log(static_cast<double>(n_)));
}

std::uint64_t prefix_hash(std::span<const ActionId> prefix) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint32_t>(prefix.size()));
  for (ActionId a : prefix) mix(static_cast<std::uint32_t>(a));
  return h;
}

std::vector<double> log_softmax(std::span<const double> raw) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : raw) mx = std::max(mx, v);
  double sum = 0.0;
  for (double v : raw) sum += std::exp(v - mx);
  const double lse = mx + std::log(sum);
  std::vector<double> out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] - lse;
  return out;
}

void TableScorer::set(std::span<const ActionId> prefix, ActionId a, double raw) {
  if (a < 0 || static_cast<std::size_t>(a) >= n_) throw std::out_of_range("table scorer action out of range");
  table_[prefix_hash(prefix)][a] = raw;
}

std::vector<double> TableScorer::score(const Utterance&, const IRState& s) const {
  std::vector<double> raw(n_, 0.0);
  const std::vector<ActionId> prefix = s.actions();
  if (auto it = table_.find(prefix_hash(prefix)); it != table_.end())
    for (const auto& [a, v] : it->second) raw[static_cast<std::size_t>(a)] = v;
  return log_softmax(raw);
}

TableScorer TableScorer::parse(std::string_view text, std::size_t num_actions) {
  TableScorer t(num_actions);
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto arrow = line.find("->");
    if (arrow == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) throw ParseError("expected '<prefix> -> <action> <score>'", {lineno, 1});
      continue;
    }
    std::vector<ActionId> prefix;
    std::istringstream lhs(line.substr(0, arrow));
    std::string tok;
    try {
      while (lhs >> tok) prefix.push_back(static_cast<ActionId>(std::stol(tok)));
      std::istringstream rhs(line.substr(arrow + 2));
      std::string a, v, extra;
      if (!(rhs >> a >> v) || (rhs >> extra)) throw std::invalid_argument("rhs");
      const long action = std::stol(a);
      if (action < 0 || static_cast<std::size_t>(action) >= num_actions) throw ParseError("action id out of range", {lineno, 1});
      t.set(prefix, static_cast<ActionId>(action), std::stod(v));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      throw ParseError("expected '<prefix> -> <action> <score>'", {lineno, 1});
    }
  }
  return t;
}

TableScorer TableScorer::load(const std::string& path, std::size_t num_actions) {
  return parse(read_file(path), num_actions);
}

Decoder::Decoder(const Grammar& g, const CandidateIndex* candidates)
    : constraints_(g, candidates), cache_(std::make_unique<MaskCache>()) {}

std::vector<double> Decoder::constrained_scores(const Scorer& scorer, const IRState& s, const Utterance& x,
                                                Constraint c) const {
  std::vector<double> scores = scorer.score(x, s);
  const std::size_t n = constraints_.grammar().num_actions();
  if (scores.size() != n)
    throw std::invalid_argument("scorer returned " + std::to_string(scores.size()) + " scores for " +
                                std::to_string(n) + " actions");
  auto apply_mask = [&](const MaskVector& m) {
    for (std::size_t a = 0; a < n; ++a)
      if (m[a] == kMasked) scores[a] = -std::numeric_limits<double>::infinity();
  };
  if (constraints_.is_type_keyed(s, c)) {
    apply_mask(mask_vector(constraints_, s, *cache_, c));
  } else {
    apply_mask(to_mask(constraints_.act_cand(s)));
  }
  return scores;
}

Hypothesis Decoder::greedy_decode(const Scorer& scorer, const Utterance& x, const DecodeConfig& cfg) const {
  validate(cfg);
  Hypothesis h{IRState::initial(constraints_.grammar()), 0.0, false};
  for (std::size_t step = 0; step < cfg.max_steps && !h.state.is_complete(); ++step) {
    const std::vector<double> scores = constrained_scores(scorer, h.state, x, cfg.constraint);
    ActionId best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < scores.size(); ++a) {
      if (scores[a] > best_score) {
        best_score = scores[a];
        best = static_cast<ActionId>(a);
      }
    }
    if (best < 0) break;  // dead end
    h.state = h.state.apply(best, check_for(cfg.constraint));
    h.logprob += best_score;
  }
  h.finished = h.state.is_complete();
  return h;
}

std::vector<Hypothesis> Decoder::beam_search(const Scorer& scorer, const Utterance& x, const DecodeConfig& cfg) const {
  validate(cfg);
  const std::size_t k = cfg.beam;
  std::vector<Hypothesis> beam{Hypothesis{IRState::initial(constraints_.grammar()), 0.0, false}};

  struct Cand {
    double logprob;
    std::size_t parent;
    ActionId action;  // -1 carries a finished parent over unchanged
  };

  for (std::size_t step = 0; step < cfg.max_steps; ++step) {
    if (std::none_of(beam.begin(), beam.end(), [](const Hypothesis& h) { return !h.finished; })) break;

    std::vector<std::vector<ActionId>> seqs;
    seqs.reserve(beam.size());
    for (const auto& h : beam) seqs.push_back(h.state.actions());

    std::vector<Cand> cands;
    for (std::size_t i = 0; i < beam.size(); ++i) {
      if (beam[i].finished) {
        cands.push_back({beam[i].logprob, i, -1});
        continue;
      }
      const std::vector<double> scores = constrained_scores(scorer, beam[i].state, x, cfg.constraint);
      for (std::size_t a = 0; a < scores.size(); ++a)
        if (scores[a] > -std::numeric_limits<double>::infinity())
          cands.push_back({beam[i].logprob + scores[a], i, static_cast<ActionId>(a)});
    }
    if (cands.empty()) break;  // every live hypothesis is a dead end

    // Lexicographic order of parent sequence + action, without copying.
    auto seq_less = [&](const Cand& p, const Cand& q) {
      const auto& sp = seqs[p.parent];
      const auto& sq = seqs[q.parent];
      const std::size_t lp = sp.size() + (p.action >= 0);
      const std::size_t lq = sq.size() + (q.action >= 0);
      for (std::size_t i = 0; i < std::min(lp, lq); ++i) {
        const ActionId ap = i < sp.size() ? sp[i] : p.action;
        const ActionId aq = i < sq.size() ? sq[i] : q.action;
        if (ap != aq) return ap < aq;
      }
      return lp < lq;
    };
    auto better = [&](const Cand& p, const Cand& q) {
      if (p.logprob != q.logprob) return p.logprob > q.logprob;
      return seq_less(p, q);
    };
    if (cands.size() > k) {
      std::nth_element(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(k), cands.end(), better);
      cands.resize(k);
    }
    std::sort(cands.begin(), cands.end(), better);

    std::vector<Hypothesis> next;
    next.reserve(cands.size());
    for (const Cand& c : cands) {
      if (c.action < 0) {
        next.push_back(beam[c.parent]);
        continue;
      }
      IRState s = beam[c.parent].state.apply(c.action, check_for(cfg.constraint));
      const bool done = s.is_complete();
      next.push_back(Hypothesis{std::move(s), c.logprob, done});
    }
    beam = std::move(next);
  }

  std::vector<Hypothesis> finished;
  for (const auto& h : beam)
    if (h.finished) finished.push_back(h);
  if (!finished.empty()) return finished;  // already in rank order
  if (beam.empty()) return {};
  return {beam.front()};
}

std::vector<Hypothesis> Decoder::decode(const Scorer& scorer, const Utterance& x, const DecodeConfig& cfg) const {
  if (cfg.strategy == SearchStrategy::greedy) return {greedy_decode(scorer, x, cfg)};
  return beam_search(scorer, x, cfg);
}

}  // namespace cgdec
