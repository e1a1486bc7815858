#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"
#include "rlp/numerics/graph.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rlp::rlcore {

/// Exact KL(p || q) between two categorical log-distributions.
double kl_divergence(const numerics::RowVector& log_p, const numerics::RowVector& log_q);

/// L x V log-probabilities of the thought policy at each thought position,
/// computed on the inference path.
numerics::Matrix thought_policy_rows(const model::ParameterSet& params, std::span<const model::TokenId> prefix,
                                     const model::ThoughtSample& thought);

/// Sum over thought positions of KL(pi_theta || pi_ref), recorded on a graph.
/// `log_probs` is the L x V current policy; `reference` the matching rows.
numerics::Var kl_term(numerics::Graph& graph, numerics::Var log_probs, const numerics::Matrix& reference);

struct ThoughtContext {
  std::span<const model::TokenId> prefix;
  const model::ThoughtSample* thought;
};

/// beta * mean over thought positions of KL(pi_theta || pi_ref). With beta 0
/// the reference is never touched and may be null.
double kl_anchor(const model::ParameterSet& current, const model::ParameterSet* reference,
                 std::span<const ThoughtContext> contexts, double beta);

/// Count of reference-policy forward passes, for asserting that beta = 0
/// performs none.
std::uint64_t reference_forward_passes();

}  // namespace rlp::rlcore
