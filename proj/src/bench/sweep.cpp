#include "rlp/bench/sweep.hpp"

#include "rlp/bench/metrics.hpp"
#include "rlp/trainer/checkpoint.hpp"
#include "rlp/trainer/run.hpp"

#include <sstream>

namespace rlp::bench {

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "rollouts") return SweepAxis::Rollouts;
  if (name == "length") return SweepAxis::Length;
  if (name == "kl") return SweepAxis::Kl;
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "' (expected rollouts, length or kl)");
}

std::string_view sweep_axis_name(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Rollouts: return "rollouts";
    case SweepAxis::Length: return "length";
    case SweepAxis::Kl: return "kl";
  }
  return "?";
}

std::vector<SweepCell> sweep_cells(const trainer::RunConfig& base, SweepAxis axis) {
  std::vector<SweepCell> cells;
  auto add = [&](const std::string& value, auto&& edit) {
    SweepCell cell{std::string(sweep_axis_name(axis)) + "-" + value, base};
    edit(cell.config);
    cell.config.validate();
    cells.push_back(std::move(cell));
  };
  switch (axis) {
    case SweepAxis::Rollouts:
      for (int g : {4, 8, 16, 32}) add(std::to_string(g), [g](trainer::RunConfig& c) { c.rollouts = g; });
      break;
    case SweepAxis::Length:
      for (int l : {4, 8, 16, 32}) add(std::to_string(l), [l](trainer::RunConfig& c) { c.model.thought_budget = l; });
      break;
    case SweepAxis::Kl:
      add("0", [](trainer::RunConfig& c) { c.clip.kl_beta = 0.0; });
      add("0.001", [](trainer::RunConfig& c) { c.clip.kl_beta = 1e-3; });
      break;
  }
  return cells;
}

RunResult run_experiment(const trainer::RunConfig& config, const std::filesystem::path& out_dir,
                         const std::string& name, const std::optional<std::filesystem::path>& resume) {
  std::filesystem::create_directories(out_dir);
  trainer::TrainerState state = resume ? trainer::load_checkpoint(*resume, config.model) : trainer::make_state(config);
  if (resume) {
    // The checkpoint carries the run's own config; only the horizon may move.
    state.config.steps = config.steps;
  }
  const auto corpus = trainer::build_corpus(state.config);
  RunResult result;
  result.metrics = out_dir / (name + ".jsonl");
  result.checkpoint = out_dir / (name + ".ckpt");
  MetricsFile metrics(result.metrics, resume.has_value());
  const int every = state.config.checkpoint_every;
  try {
    result.reports = trainer::train(state, corpus, static_cast<std::uint64_t>(state.config.steps),
                                    [&](const trainer::StepReport& report, const trainer::TrainerState& s) {
                                      metrics.emit(report);
                                      if (every > 0 && s.step % static_cast<std::uint64_t>(every) == 0) {
                                        trainer::save_checkpoint(
                                            s, out_dir / (name + "-step" + std::to_string(s.step) + ".ckpt"));
                                      }
                                    });
  } catch (const MetricsError&) {
    // The failing step is already committed; keep it resumable.
    trainer::save_checkpoint(state, result.checkpoint);
    throw;
  }
  trainer::save_checkpoint(state, result.checkpoint);
  return result;
}

}  // namespace rlp::bench
