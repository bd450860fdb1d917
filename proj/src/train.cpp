#include "cgdec/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "cgdec/logical_form.hpp"

namespace cgdec {

namespace {

double log_sum_exp(const std::vector<double>& v) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : v) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

std::optional<Denotation> gold_of(const ParserEnv& env, const Example& ex) {
  if (ex.gold_denotation) return ex.gold_denotation;
  if (ex.gold_actions) {
    try {
      return env.denotation(*ex.gold_actions);
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

std::vector<Example> parse_dataset(std::string_view text) {
  std::vector<Example> out;
  for (const auto& rec : read_all(text)) {
    if (!rec.is_list() || rec.size() != 3 || !rec[0].is_symbol("example") || !rec[1].is_string())
      throw ParseError("expected (example \"utterance\" (gold-denotation ...)|(gold-actions ...))", rec.loc());
    Example ex;
    ex.utterance = rec[1].text();
    const Sexpr& gold = rec[2];
    if (gold.is_list() && gold.size() == 2 && gold[0].is_symbol("gold-denotation")) {
      ex.gold_denotation = Denotation::from_sexpr(gold[1]);
    } else if (gold.is_list() && gold.size() >= 1 && gold[0].is_symbol("gold-actions")) {
      std::vector<ActionId> ids;
      for (std::size_t i = 1; i < gold.size(); ++i) {
        const Sexpr& id = gold[i];
        if (!id.is_symbol() || id.text().empty() ||
            !std::all_of(id.text().begin(), id.text().end(), [](char c) { return c >= '0' && c <= '9'; }))
          throw ParseError("expected an action id", id.loc());
        ids.push_back(static_cast<ActionId>(std::stol(id.text())));
      }
      ex.gold_actions = std::move(ids);
    } else {
      throw ParseError("expected (gold-denotation <value>) or (gold-actions <ids>)", gold.loc());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> load_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

std::optional<Denotation> ParserEnv::denotation(const std::vector<ActionId>& actions) const {
  IRState s = IRState::initial(*grammar_);
  try {
    for (ActionId a : actions) s = s.apply(a, ApplyCheck::none);
  } catch (const IrError&) {
    return std::nullopt;
  }
  if (!s.is_complete()) throw IncompleteStateError();
  try {
    return execute(to_logical_form(s, TemplateKind::default_form), *kb_);
  } catch (const TemplateError&) {
    return std::nullopt;
  } catch (const ExecutionError&) {
    return std::nullopt;
  }
}

int ParserEnv::consistency(const std::vector<ActionId>& actions, const Denotation& gold) const {
  auto d = denotation(actions);
  return d && *d == gold ? 1 : 0;
}

void dedupe_sequences(std::vector<std::vector<ActionId>>& seqs) {
  std::vector<std::vector<ActionId>> out;
  for (auto& s : seqs)
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(std::move(s));
  seqs = std::move(out);
}

double mml_objective(const Grammar& g, const ToyModel& model, std::span<const WeakTerm> terms, std::size_t* skipped) {
  const LogLinearScorer scorer(g, model);
  double total = 0.0;
  std::size_t skip = 0;
  for (const auto& t : terms) {
    if (t.consistent.empty()) {
      ++skip;
      continue;
    }
    std::vector<double> lps;
    for (const auto& seq : t.consistent) lps.push_back(scorer.sequence_log_prob(t.utterance, seq));
    total += log_sum_exp(lps);
  }
  if (skipped) *skipped = skip;
  return total;
}

MmlGradient mml_gradient(const Grammar& g, const ToyModel& model, const WeakTerm& term) {
  MmlGradient out;
  out.grad.assign(model.size(), 0.0);
  if (term.consistent.empty()) return out;
  out.has_consistent = true;
  const LogLinearScorer scorer(g, model);
  std::vector<double> lps;
  for (const auto& seq : term.consistent) lps.push_back(scorer.sequence_log_prob(term.utterance, seq));
  const double lse = log_sum_exp(lps);
  for (std::size_t i = 0; i < lps.size(); ++i) {
    out.posterior.push_back(std::exp(lps[i] - lse));
    scorer.accumulate_gradient(term.utterance, term.consistent[i], out.posterior.back(), out.grad);
  }
  return out;
}

SearchResult search_step(const ParserEnv& env, const ToyModel& model, std::span<const Example> examples,
                         std::size_t beam, Constraint c, std::size_t max_steps) {
  const LogLinearScorer scorer(env.grammar(), model);
  DecodeConfig cfg;
  cfg.constraint = c;
  cfg.strategy = SearchStrategy::beam;
  cfg.beam = beam;
  cfg.max_steps = max_steps;
  SearchResult out;
  std::size_t found = 0;
  for (const auto& ex : examples) {
    WeakTerm term{ex.utterance, {}};
    if (auto gold = gold_of(env, ex)) {
      for (const auto& h : env.decoder().beam_search(scorer, ex.utterance, cfg)) {
        if (!h.finished) continue;
        std::vector<ActionId> seq = h.state.actions();
        if (env.consistency(seq, *gold)) term.consistent.push_back(std::move(seq));
      }
      dedupe_sequences(term.consistent);
    }
    found += !term.consistent.empty();
    out.terms.push_back(std::move(term));
  }
  out.oracle_accuracy = examples.empty() ? 0.0 : static_cast<double>(found) / static_cast<double>(examples.size());
  return out;
}

StepStats maximize_step(const Grammar& g, ToyModel& model, std::span<const WeakTerm> merged, std::size_t epochs,
                        double lr) {
  StepStats stats;
  for (std::size_t e = 0; e < epochs; ++e) {
    for (const auto& term : merged) {
      MmlGradient grad = mml_gradient(g, model, term);
      if (!grad.has_consistent) {
        ++stats.skipped;
        continue;
      }
      auto& w = model.weights();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] += lr * grad.grad[i];
      ++stats.updates;
    }
  }
  return stats;
}

void train_strong(const ParserEnv& env, ToyModel& model, std::span<const Example> strong, std::size_t epochs,
                  double lr) {
  std::vector<WeakTerm> terms;
  const ActionConstraints& ac = env.decoder().constraints();
  for (std::size_t i = 0; i < strong.size(); ++i) {
    const Example& ex = strong[i];
    if (!ex.gold_actions) throw GoldSequenceError("example " + std::to_string(i) + " has no gold actions");
    IRState s = IRState::initial(env.grammar());
    for (ActionId a : *ex.gold_actions) {
      if (s.is_complete() || a < 0 || static_cast<std::size_t>(a) >= env.grammar().num_actions() ||
          !ac.act_hybr(s).contains(a))
        throw GoldSequenceError("example " + std::to_string(i) + " (\"" + ex.utterance + "\"): action " +
                                std::to_string(a) + " at step " + std::to_string(s.length()) +
                                " is not allowed by the hybrid constraint");
      s = s.apply(a);
    }
    if (!s.is_complete())
      throw GoldSequenceError("example " + std::to_string(i) + " (\"" + ex.utterance + "\"): gold sequence is incomplete");
    terms.push_back(WeakTerm{ex.utterance, {*ex.gold_actions}});
  }
  maximize_step(env.grammar(), model, terms, epochs, lr);
}

double evaluate_accuracy(const ParserEnv& env, const ToyModel& model, std::span<const Example> examples,
                         Constraint c, std::size_t beam, std::size_t max_steps) {
  if (examples.empty()) return 0.0;
  const LogLinearScorer scorer(env.grammar(), model);
  DecodeConfig cfg;
  cfg.constraint = c;
  cfg.strategy = beam <= 1 ? SearchStrategy::greedy : SearchStrategy::beam;
  cfg.beam = std::max<std::size_t>(1, beam);
  cfg.max_steps = max_steps;
  std::size_t correct = 0;
  for (const auto& ex : examples) {
    auto gold = gold_of(env, ex);
    if (!gold) continue;
    const auto hyps = env.decoder().decode(scorer, ex.utterance, cfg);
    if (hyps.empty() || !hyps.front().finished) continue;
    correct += static_cast<std::size_t>(env.consistency(hyps.front().state.actions(), *gold));
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

std::vector<CycleReport> train_weaksup(const ParserEnv& env, ToyModel& model, std::span<const Example> pretrain,
                                       std::span<const Example> weak, std::span<const Example> validation,
                                       const WeakSupConfig& cfg) {
  std::vector<CycleReport> reports;
  std::mt19937_64 rng(cfg.seed);
  std::vector<WeakTerm> strong_terms;
  if (!pretrain.empty()) {
    train_strong(env, model, pretrain, cfg.pretrain_epochs, cfg.lr);
    for (const auto& ex : pretrain) strong_terms.push_back(WeakTerm{ex.utterance, {*ex.gold_actions}});
  }
  reports.push_back(CycleReport{0, 0.0, evaluate_accuracy(env, model, validation, cfg.constraint, cfg.beam, cfg.max_steps), 0});
  for (std::size_t cycle = 1; cycle <= cfg.cycles; ++cycle) {
    SearchResult found = search_step(env, model, weak, cfg.beam, cfg.constraint, cfg.max_steps);
    std::vector<WeakTerm> merged = strong_terms;
    merged.insert(merged.end(), found.terms.begin(), found.terms.end());
    std::shuffle(merged.begin(), merged.end(), rng);
    const StepStats stats = maximize_step(env.grammar(), model, merged, cfg.epochs, cfg.lr);
    reports.push_back(CycleReport{cycle, found.oracle_accuracy,
                                  evaluate_accuracy(env, model, validation, cfg.constraint, cfg.beam, cfg.max_steps),
                                  stats.skipped});
  }
  return reports;
}

}  // namespace cgdec
