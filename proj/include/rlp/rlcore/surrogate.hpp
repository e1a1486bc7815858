#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"
#include "rlp/numerics/graph.hpp"
#include "rlp/rlcore/advantage.hpp"

#include <span>
#include <vector>

namespace rlp::rlcore {

struct ClipParams {
  double eps_low = 0.2;
  double eps_high = 0.2;
  int inner_epochs = 1;
  double kl_beta = 0.0;

  void validate() const;
};

/// log pi_theta - log pi_old per thought token, exponentiated.
std::vector<double> importance_ratios(const model::ThoughtSample& thought, const model::ParameterSet& current,
                                      std::span<const model::TokenId> prefix);

/// min(rho * A, clip(rho, 1 - eps_low, 1 + eps_high) * A)
double clipped_term(double ratio, double advantage, const ClipParams& clip);

/// True when the clipped branch is strictly smaller, i.e. the token's
/// gradient is cut off.
bool clip_binds(double ratio, double advantage, const ClipParams& clip);

/// Surrogate loss from precomputed ratios: ratios[g][i][u] for group g,
/// member i, thought token u.
double clipped_surrogate(std::span<const GroupRecord> groups, const std::vector<std::vector<std::vector<double>>>& ratios,
                         const ClipParams& clip);

/// Records -weight * (1/|c|) sum_u min(rho_u A, clip(rho_u) A) for one thought.
/// `chosen` is the L x 1 current log-probability of each thought token.
numerics::Var surrogate_term(numerics::Graph& graph, numerics::Var chosen, std::span<const double> behavior_log_probs,
                             double advantage, const ClipParams& clip, double weight);

}  // namespace rlp::rlcore
