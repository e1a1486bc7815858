#pragma once

#include "rlp/bench/ledger.hpp"
#include "rlp/corpus/synthetic.hpp"
#include "rlp/corpus/vocabulary.hpp"
#include "rlp/model/parameters.hpp"
#include "rlp/reward/ema.hpp"
#include "rlp/trainer/optimizer.hpp"
#include "rlp/trainer/run_config.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace rlp::trainer {

/// Everything that evolves during a run. Randomness is derived from the
/// configured seeds and the step counter, so no generator state is stored.
struct TrainerState {
  RunConfig config;
  ParameterSet params;
  reward::EmaTeacher teacher;
  Optimizer optimizer;
  std::shared_ptr<const ParameterSet> reference;  // pi_ref for the KL anchor
  bench::ComputeLedger ledger;
  std::uint64_t step = 0;

  explicit TrainerState(const RunConfig& c);
};

/// Fresh state: parameters from init_checkpoint when set, else from model_seed.
TrainerState make_state(const RunConfig& config);

struct StepReport {
  std::uint64_t step = 0;
  Arm arm = Arm::Rlp;
  double mean_reward = 0.0;
  double min_reward = 0.0;
  double max_reward = 0.0;
  double mean_abs_advantage = 0.0;
  double mean_advantage = 0.0;
  double loss = 0.0;
  double mean_thought_len = 0.0;
  double truncated_frac = 0.0;
  double clip_frac = 0.0;
  std::uint64_t input_tokens = 0;
  std::uint64_t flop_tokens = 0;
  double wall_ms = 0.0;

  std::size_t contexts = 0;        // contexts that entered the update
  std::size_t filtered = 0;        // contexts dropped by the entropy filter
  std::vector<double> rewards;     // every reward of the step, for support checks
};

/// The vocabulary every synthetic run uses.
const corpus::Vocabulary& desk_vocabulary();

std::vector<corpus::Document> build_corpus(const RunConfig& config);

}  // namespace rlp::trainer
