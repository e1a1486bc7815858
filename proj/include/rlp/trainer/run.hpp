#pragma once

#include "rlp/corpus/synthetic.hpp"
#include "rlp/trainer/state.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace rlp::trainer {

/// The batch of a given step; a pure function of (config, corpus, step).
std::vector<model::PositionContext> batch_for_step(const RunConfig& config, std::span<const corpus::Document> corpus,
                                                   std::uint64_t step);

/// Samples the step's batch and runs the configured arm once.
StepReport train_step(TrainerState& state, std::span<const corpus::Document> corpus);

using StepSink = std::function<void(const StepReport&, const TrainerState&)>;

/// Steps until state.step reaches `until` or the token budget is spent. The
/// sink sees every report after its step has been committed.
std::vector<StepReport> train(TrainerState& state, std::span<const corpus::Document> corpus, std::uint64_t until,
                              const StepSink& sink = {});

}  // namespace rlp::trainer
