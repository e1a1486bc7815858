#pragma once

#include "rlp/model/types.hpp"
#include "rlp/trainer/state.hpp"

#include <span>
#include <vector>

namespace rlp::baselines {

using trainer::StepReport;
using trainer::TrainerState;

/// -mean log q(x_t | x_<t) over a batch, without updating anything.
double ntp_loss(const model::ParameterSet& params, std::span<const model::PositionContext> batch);

/// One next-token-prediction update over the batch. Rejects any context that
/// carries a thought delimiter: the CPT arm has no thought channel.
StepReport ntp_step(TrainerState& state, const std::vector<model::PositionContext>& batch);

/// A token sequence with the positions whose next-token loss is trained.
struct SequenceExample {
  std::vector<model::TokenId> tokens;
  std::vector<std::size_t> targets;
};

/// NTP update over whole sequences, loss averaged over every listed target.
/// Returns the pre-update loss.
double sequence_ntp_step(model::ParameterSet& params, trainer::Optimizer& optimizer,
                         std::span<const SequenceExample> batch, int threads);

}  // namespace rlp::baselines
