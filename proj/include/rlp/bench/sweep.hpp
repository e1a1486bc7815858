#pragma once

#include "rlp/trainer/state.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rlp::bench {

enum class SweepAxis { Rollouts, Length, Kl };

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view sweep_axis_name(SweepAxis axis);

struct SweepCell {
  std::string name;  // e.g. "rollouts-8"
  trainer::RunConfig config;
};

/// Cells of one ablation axis: G in {4, 8, 16, 32}, L_max in {4, 8, 16, 32},
/// or KL weight in {0, 1e-3}. Each cell differs from `base` in that knob only.
std::vector<SweepCell> sweep_cells(const trainer::RunConfig& base, SweepAxis axis);

struct RunResult {
  std::vector<trainer::StepReport> reports;
  std::filesystem::path metrics;
  std::filesystem::path checkpoint;  // final state
};

/// Trains one run to config.steps, writing `<name>.jsonl` metrics, a
/// `<name>-step<N>.ckpt` every checkpoint_every steps and a final
/// `<name>.ckpt` into `out_dir`. With `resume`, continues that checkpoint
/// and appends to the metrics file.
RunResult run_experiment(const trainer::RunConfig& config, const std::filesystem::path& out_dir,
                         const std::string& name, const std::optional<std::filesystem::path>& resume = {});

}  // namespace rlp::bench
