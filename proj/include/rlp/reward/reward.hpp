#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"

#include <cstddef>
#include <vector>

namespace rlp::reward {

struct RewardRecord {
  double s_pred = 0.0;  // log p_theta(x_t | x_<t, c_t)
  double s_ema = 0.0;   // log pbar_phi(x_t | x_<t)
  double r = 0.0;
  std::size_t context = 0;
  std::size_t member = 0;
};

/// Information gain S_pred - S_ema. Plain doubles in and out: nothing here is
/// recorded on a gradient tape.
double compute_reward(double s_pred, double s_ema);

RewardRecord make_record(double s_pred, double s_ema, std::size_t context, std::size_t member);

/// S_pred by teacher forcing on x_<t ++ THINK_OPEN ++ c ++ THINK_CLOSE.
double score_reasoned(const model::ParameterSet& params, const model::PositionContext& ctx,
                      const std::vector<model::TokenId>& thought);

}  // namespace rlp::reward
