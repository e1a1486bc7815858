#pragma once

#include "rlp/model/types.hpp"
#include "rlp/rlcore/advantage.hpp"
#include "rlp/trainer/state.hpp"

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlp::trainer {

enum class RewardKind {
  InformationGain,  // S_pred - S_ema
  Binary,           // greedy next-token match after the thought
};

/// The step's loss was not finite. Parameters, teacher and ledger are as
/// they were before the step.
class NonFiniteLoss : public std::runtime_error {
 public:
  NonFiniteLoss(std::size_t group, double value)
      : std::runtime_error("non-finite surrogate loss (" + std::to_string(value) + ") in group " + std::to_string(group)),
        group_(group) {}
  std::size_t group() const { return group_; }

 private:
  std::size_t group_;
};

/// Rollout phase output for one context: the group plus its scores.
struct ScoredGroup {
  rlcore::GroupRecord group;
  double s_ema = 0.0;
  std::vector<double> s_pred;
};

/// Samples G thoughts per context from `behavior` and scores them. Pure
/// reader of its parameter arguments.
std::vector<ScoredGroup> rollout(const ParameterSet& behavior, const ParameterSet* teacher,
                                 const std::vector<model::PositionContext>& batch, const RunConfig& config,
                                 std::uint64_t step, RewardKind kind);

/// Gradient of surrogate (+ KL anchor) with respect to `params`, reduced in
/// context order. Returns the loss; fills clip statistics.
double surrogate_gradient(const ParameterSet& params, const ParameterSet* reference,
                          const std::vector<model::PositionContext>& batch, const std::vector<ScoredGroup>& groups,
                          const rlcore::ClipParams& clip, int threads, GradientMap& grads, std::size_t* clipped_tokens,
                          std::size_t* total_tokens);

/// One iteration: snapshot, lazy teacher init, rollout and scoring, group
/// advantages, clipped surrogate over thought tokens, optimizer step(s),
/// then the EMA update.
StepReport policy_step(TrainerState& state, const std::vector<model::PositionContext>& batch, RewardKind kind);

inline StepReport rlp_step(TrainerState& state, const std::vector<model::PositionContext>& batch) {
  return policy_step(state, batch, RewardKind::InformationGain);
}

}  // namespace rlp::trainer
