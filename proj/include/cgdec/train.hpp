#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgdec/kb.hpp"
#include "cgdec/model.hpp"

namespace cgdec {

struct Example {
  Utterance utterance;
  std::optional<std::vector<ActionId>> gold_actions;  // strong supervision
  std::optional<Denotation> gold_denotation;          // weak supervision
};

// One example per line:
//   (example "utterance" (gold-denotation <denotation>))
//   (example "utterance" (gold-actions 0 4 ...))
// Blank lines and ';' comments are ignored.
std::vector<Example> parse_dataset(std::string_view text);
std::vector<Example> load_dataset(const std::string& path);

// A gold sequence that the hybrid constraint rejects.
class GoldSequenceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Grammar, candidates and KB of one domain, plus a decoder over them.
class ParserEnv {
 public:
  ParserEnv(const Grammar& g, const CandidateIndex* candidates, const MiniKB& kb)
      : grammar_(&g), candidates_(candidates), kb_(&kb), decoder_(g, candidates) {}

  const Grammar& grammar() const { return *grammar_; }
  const CandidateIndex* candidates() const { return candidates_; }
  const MiniKB& kb() const { return *kb_; }
  const Decoder& decoder() const { return decoder_; }

  // Denotation of a complete sequence; nullopt when it does not replay, its
  // logical form cannot be built, or execution fails. Throws
  // IncompleteStateError for a sequence that replays to an incomplete state.
  std::optional<Denotation> denotation(const std::vector<ActionId>& actions) const;
  // 1 iff the denotation equals `gold`.
  int consistency(const std::vector<ActionId>& actions, const Denotation& gold) const;

 private:
  const Grammar* grammar_;
  const CandidateIndex* candidates_;
  const MiniKB* kb_;
  Decoder decoder_;
};

// An utterance with the consistent sequences found for it, deduplicated.
struct WeakTerm {
  Utterance utterance;
  std::vector<std::vector<ActionId>> consistent;
};

void dedupe_sequences(std::vector<std::vector<ActionId>>& seqs);

// Sum over terms of log sum_{a in consistent} p(a | x). Terms with no
// sequence contribute 0 and are counted in `skipped`.
double mml_objective(const Grammar& g, const ToyModel& model, std::span<const WeakTerm> terms,
                     std::size_t* skipped = nullptr);

struct MmlGradient {
  std::vector<double> grad;
  std::vector<double> posterior;  // over term.consistent, renormalized
  bool has_consistent = false;
};
MmlGradient mml_gradient(const Grammar& g, const ToyModel& model, const WeakTerm& term);

struct SearchResult {
  std::vector<WeakTerm> terms;  // one per example, possibly empty
  double oracle_accuracy = 0.0;
};
SearchResult search_step(const ParserEnv& env, const ToyModel& model, std::span<const Example> examples,
                         std::size_t beam, Constraint c, std::size_t max_steps = 40);

struct StepStats {
  std::size_t skipped = 0;  // term visits without a consistent sequence
  std::size_t updates = 0;
};
// `epochs` passes of per-term gradient ascent with a fixed step size, in
// the given order.
StepStats maximize_step(const Grammar& g, ToyModel& model, std::span<const WeakTerm> merged, std::size_t epochs,
                        double lr);

// Maximum likelihood on gold sequences. Throws GoldSequenceError before any
// update when a gold sequence leaves act_hybr.
void train_strong(const ParserEnv& env, ToyModel& model, std::span<const Example> strong, std::size_t epochs,
                  double lr);

// Fraction of examples whose top hypothesis is finished and consistent.
double evaluate_accuracy(const ParserEnv& env, const ToyModel& model, std::span<const Example> examples,
                         Constraint c, std::size_t beam, std::size_t max_steps = 40);

struct WeakSupConfig {
  std::size_t cycles = 16;
  std::size_t beam = 8;
  std::size_t epochs = 8;
  double lr = 0.1;
  std::size_t pretrain_epochs = 50;
  Constraint constraint = Constraint::hybr;
  std::size_t max_steps = 40;
  // Shuffles the merged set before every maximize step.
  std::uint64_t seed = 0;
};

struct CycleReport {
  std::size_t cycle = 0;  // 0 is the state after pre-training
  double oracle_accuracy = 0.0;
  double validation_accuracy = 0.0;
  std::size_t skipped = 0;
};

// Pre-train on the strong set, then alternate search and maximize steps. The
// merged set of every cycle holds the strong gold sequences plus the current
// search results.
std::vector<CycleReport> train_weaksup(const ParserEnv& env, ToyModel& model, std::span<const Example> pretrain,
                                       std::span<const Example> weak, std::span<const Example> validation,
                                       const WeakSupConfig& cfg);

}  // namespace cgdec
