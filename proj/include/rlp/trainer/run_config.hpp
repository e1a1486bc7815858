#pragma once

#include "rlp/corpus/batch.hpp"
#include "rlp/corpus/synthetic.hpp"
#include "rlp/model/config.hpp"
#include "rlp/rlcore/surrogate.hpp"

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rlp::trainer {

enum class Arm { Rlp, Cpt, Rpt };

Arm parse_arm(std::string_view name);
std::string_view arm_name(Arm arm);

enum class OptimizerKind { AdamW, Sgd };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::AdamW;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double epsilon = 1e-8;
  double weight_decay = 0.0;
};

class RunConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Every knob of a run. INI sections and keys use these field names.
struct RunConfig {
  model::ModelConfig model;  // [model]; thought_budget is L_max

  // [rl]
  int rollouts = 16;
  rlcore::ClipParams clip;
  double tau = 0.999;
  double temperature = 0.7;

  OptimizerConfig optimizer;  // [optimizer]

  // [run]
  Arm arm = Arm::Rlp;
  int batch_size = 32;
  int steps = 100;
  std::uint64_t model_seed = 1;
  std::uint64_t sampling_seed = 2;
  std::uint64_t data_seed = 3;
  std::uint64_t token_budget = 0;  // stop once input tokens reach this; 0 = off
  int threads = 0;                 // 0 = RLP_FORGE_THREADS or 1

  // [data]
  std::string task = "lookup";
  std::size_t corpus_size = 2048;
  corpus::SyntheticOptions synthetic;
  std::string corpus_path;  // overrides the synthetic task when set
  corpus::PositionPolicy position_policy = corpus::PositionPolicy::Stream;

  // [baseline]
  double entropy_threshold = 0.0;  // RPT arm only; 0 disables the filter

  // [base] warm-up pretraining that teaches the model to read a thought span
  struct Base {
    int steps = 0;  // 0 = start the arm from freshly initialized weights
    int batch_size = 16;
    double learning_rate = 3e-3;
    double demo_fraction = 0.5;  // share of base examples carrying a worked thought
    std::string trace = "scan";
    // Thought-span targets trained during warm-up: "none", "close" (only the
    // THINK_CLOSE that ends the trace) or "full" (every trace token too).
    std::string imitate = "close";
  } base;

  // [metrics]
  bool record_wall_time = true;

  // [checkpoint]
  std::string init_checkpoint;
  int checkpoint_every = 0;

  int completion_length() const { return model.thought_budget; }
  void validate() const;
};

RunConfig parse_run_config(const std::string& ini_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// Canonical INI rendering; parse_run_config(to_ini(c)) reproduces c.
std::string to_ini(const RunConfig& config);

}  // namespace rlp::trainer
