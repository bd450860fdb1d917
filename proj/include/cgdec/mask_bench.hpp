#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cgdec/constrain.hpp"

namespace cgdec {

// Synthetic grammar with `num_actions` actions in total: `num_rules` rule
// actions (pairs of two-constant operator classes plus query classes that
// take an operator and a repeated string), one token action per generated
// vocabulary entry, and reduce.
struct SyntheticGrammar {
  std::string dsl;
  Vocabulary vocabulary;
};
SyntheticGrammar synthetic_grammar(std::size_t num_actions, std::size_t num_rules = 53);

// Incomplete states collected from seeded act_type rollouts.
std::vector<IRState> sample_states(const ActionConstraints& ac, std::size_t count, std::mt19937_64& rng,
                                   Constraint c = Constraint::type);

enum class MaskStrategy { naive, cached, validness };
std::string_view to_string(MaskStrategy s);
MaskStrategy parse_mask_strategy(std::string_view text);

struct BenchRow {
  MaskStrategy strategy;
  std::size_t batch;
  std::size_t beam;
  std::size_t num_actions;
  double mean_step_us;
  double median_step_us;
};

struct BenchConfig {
  std::vector<std::size_t> sizes{50261};
  std::vector<std::size_t> batches{64};
  std::size_t beam = 1;
  std::vector<MaskStrategy> strategies{MaskStrategy::naive, MaskStrategy::cached, MaskStrategy::validness};
  std::size_t iterations = 100;
  std::uint64_t seed = 0;
};

// One timed mask-tensor build per iteration over the same batch of
// batch*beam states. The cache persists across iterations.
std::vector<BenchRow> run_mask_bench(const BenchConfig& cfg);

std::string bench_csv_header();
std::string to_csv(const BenchRow& row);

}  // namespace cgdec
