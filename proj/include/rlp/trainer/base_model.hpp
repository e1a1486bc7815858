#pragma once

#include "rlp/baselines/cpt.hpp"
#include "rlp/corpus/demonstration.hpp"
#include "rlp/trainer/run_config.hpp"

#include <span>
#include <vector>

namespace rlp::trainer {

/// Base-pretraining examples for one step. Each draws a document; with
/// probability demo_fraction one of its answer positions gets a worked thought
/// spliced in front of it. Thought tokens are trained only when imitating.
std::vector<baselines::SequenceExample> base_examples(const RunConfig& config, std::span<const corpus::Document> corpus,
                                                      int step);

/// Next-token pretraining from the seeded initialization for base.steps steps.
model::ParameterSet pretrain_base(const RunConfig& config, std::span<const corpus::Document> corpus);

/// pretrain_base, memoized per process on every setting that shapes the result.
model::ParameterSet cached_base(const RunConfig& config, std::span<const corpus::Document> corpus);

}  // namespace rlp::trainer
