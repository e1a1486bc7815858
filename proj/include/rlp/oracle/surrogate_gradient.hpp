#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"

#include <cstdint>
#include <vector>

namespace rlp::oracle {

inline constexpr double kFiniteDifferenceTolerance = 1e-4;
inline constexpr double kReinforceTolerance = 1e-10;

/// Two-layer model of under 5k parameters over a 12-symbol vocabulary.
model::ModelConfig tiny_model_config();

struct SurrogateProblem {
  model::ParameterSet params;   // theta = theta_old
  model::ParameterSet teacher;  // scores S_ema
  std::vector<model::PositionContext> batch;
  int rollouts = 4;
  double temperature = 1.0;
  bool zero_advantages = false;  // force equal rewards in every group
  std::uint64_t seed = 0;
};

/// Random tiny model, teacher and contexts, all derived from `seed`.
SurrogateProblem make_surrogate_problem(std::uint64_t seed, int contexts = 2, int rollouts = 4);

struct SurrogateGradientReport {
  std::size_t parameters = 0;
  double loss = 0.0;
  double max_abs_gradient = 0.0;
  double finite_difference_error = 0.0;  // max relative error vs central differences
  double reinforce_error = 0.0;          // max relative error vs REINFORCE with baseline
  bool passed = false;
};

/// Clipped-surrogate gradient at theta = theta_old against (a) central
/// differences of the surrogate and (b) the gradient of
/// -mean[(1/|c|) sum_u log pi(l_u) A].
SurrogateGradientReport verify_surrogate_gradient(const SurrogateProblem& problem, double step = 1e-5);

}  // namespace rlp::oracle
