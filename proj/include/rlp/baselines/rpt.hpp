#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"
#include "rlp/numerics/tensor.hpp"
#include "rlp/reward/ema.hpp"

#include <span>

namespace rlp::baselines {

/// 1 if argmax of the next-token logits equals target, else 0.
double binary_match(const numerics::RowVector& logits, model::TokenId target);

/// Sparse correctness reward: 1 iff the greedy next token after
/// x_<t ++ THINK_OPEN ++ c ++ THINK_CLOSE is x_t.
double rpt_reward(const model::ThoughtSample& thought, const model::ParameterSet& params,
                  const model::PositionContext& ctx);

/// Entropy in nats of the softmax of `logits`, computed as
/// log Z - sum_i p_i (z_i - max z) so a uniform row yields log V exactly.
double entropy_from_logits(const numerics::RowVector& logits);

double next_token_entropy(const model::ParameterSet& params, std::span<const model::TokenId> prefix);

/// True iff the EMA teacher's next-token entropy at ctx is at least threshold.
bool entropy_filter(const model::PositionContext& ctx, const reward::EmaTeacher& teacher, double threshold);

}  // namespace rlp::baselines
