#include "rlp/trainer/run.hpp"

#include "rlp/baselines/cpt.hpp"
#include "rlp/corpus/batch.hpp"
#include "rlp/rng.hpp"
#include "rlp/trainer/policy_step.hpp"

namespace rlp::trainer {

std::vector<model::PositionContext> batch_for_step(const RunConfig& config, std::span<const corpus::Document> corpus,
                                                   std::uint64_t step) {
  corpus::BatchSpec spec;
  spec.batch_size = static_cast<std::size_t>(config.batch_size);
  spec.policy = config.position_policy;
  spec.seed = Rng::derive(config.data_seed, 0xba7c4u, step);
  spec.max_prefix = static_cast<std::size_t>(config.model.max_prefix());
  return corpus::sample_batch(corpus, spec);
}

StepReport train_step(TrainerState& state, std::span<const corpus::Document> corpus) {
  const auto batch = batch_for_step(state.config, corpus, state.step);
  switch (state.config.arm) {
    case Arm::Rlp: return policy_step(state, batch, RewardKind::InformationGain);
    case Arm::Rpt: return policy_step(state, batch, RewardKind::Binary);
    case Arm::Cpt: return baselines::ntp_step(state, batch);
  }
  throw RunConfigError("unknown arm");
}

std::vector<StepReport> train(TrainerState& state, std::span<const corpus::Document> corpus, std::uint64_t until,
                              const StepSink& sink) {
  std::vector<StepReport> reports;
  const std::uint64_t budget = state.config.token_budget;
  while (state.step < until) {
    if (budget > 0 && state.ledger.input_tokens() >= budget) break;
    reports.push_back(train_step(state, corpus));
    if (sink) sink(reports.back(), state);
  }
  return reports;
}

}  // namespace rlp::trainer
