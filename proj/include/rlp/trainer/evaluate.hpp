#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"
#include "rlp/trainer/run_config.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rlp::trainer {

struct EvalReport {
  std::size_t positions = 0;
  double reasoned_ce = 0.0;  // -log p_theta(x_t | x_<t, c), c sampled from theta
  double no_think_ce = 0.0;  // -log p_theta(x_t | x_<t)
  double teacher_ce = 0.0;   // -log pbar_phi(x_t | x_<t); 0 without a teacher
  double mean_reward = 0.0;  // teacher_ce - reasoned_ce when a teacher is given
  double mean_thought_len = 0.0;
};

/// Cross-entropies at the given positions. Thoughts are drawn with seeds
/// derived from `seed`, `samples` per position.
EvalReport evaluate(const model::ParameterSet& params, const model::ParameterSet* teacher,
                    std::span<const model::PositionContext> contexts, double temperature, int max_len,
                    std::uint64_t seed, int samples = 4, int threads = 1);

/// Answer positions of a held-out corpus drawn like the training corpus but
/// from an independent seed.
std::vector<model::PositionContext> held_out_positions(const RunConfig& config, std::size_t documents);

}  // namespace rlp::trainer
