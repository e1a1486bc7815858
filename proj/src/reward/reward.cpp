#include "rlp/reward/reward.hpp"

#include "rlp/model/inference.hpp"
#include "rlp/numerics/tensor.hpp"

#include <cmath>
#include <string>

namespace rlp::reward {

double compute_reward(double s_pred, double s_ema) {
  if (!std::isfinite(s_pred) || !std::isfinite(s_ema)) {
    throw numerics::NonFiniteError("reward inputs must be finite (S_pred=" + std::to_string(s_pred) +
                                   ", S_ema=" + std::to_string(s_ema) + ")");
  }
  return s_pred - s_ema;
}

RewardRecord make_record(double s_pred, double s_ema, std::size_t context, std::size_t member) {
  return RewardRecord{s_pred, s_ema, compute_reward(s_pred, s_ema), context, member};
}

double score_reasoned(const model::ParameterSet& params, const model::PositionContext& ctx,
                      const std::vector<model::TokenId>& thought) {
  return model::score_next_token(params, model::reasoned_prefix(ctx.prefix, thought), ctx.target);
}

}  // namespace rlp::reward
