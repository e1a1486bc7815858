#include "rlp/bench/cli.hpp"

#include "rlp/bench/compare.hpp"
#include "rlp/bench/metrics.hpp"
#include "rlp/bench/sweep.hpp"
#include "rlp/model/serialization.hpp"
#include "rlp/oracle/suite.hpp"
#include "rlp/rng.hpp"
#include "rlp/trainer/run_config.hpp"
#include "rlp/trainer/state.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>

namespace rlp::bench {

namespace {

/// Bad input the user can fix; maps to the usage exit code.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::string arm;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string match = "tokens";
  std::string sweep;
  std::string resume;
  std::string name;
  std::optional<int> steps;
  std::vector<std::string> inputs;
  std::string task;
  std::size_t size = 0;
};

trainer::RunConfig resolve_config(const Options& o, bool required) {
  trainer::RunConfig config;
  if (!o.config.empty()) {
    config = trainer::load_run_config(o.config);
  } else if (required) {
    throw UsageError("--config is required");
  }
  if (!o.arm.empty()) config.arm = trainer::parse_arm(o.arm);
  if (o.seed) {
    config.model_seed = Rng::derive(*o.seed, 1);
    config.sampling_seed = Rng::derive(*o.seed, 2);
    config.data_seed = Rng::derive(*o.seed, 3);
  }
  if (o.steps) config.steps = *o.steps;
  config.validate();
  return config;
}

double window_mean(const std::vector<trainer::StepReport>& reports, bool tail) {
  if (reports.empty()) return 0.0;
  const std::size_t n = std::max<std::size_t>(1, reports.size() / 10);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += reports[tail ? reports.size() - n + i : i].mean_reward;
  return sum / static_cast<double>(n);
}

int cmd_train(const Options& o, std::ostream& out) {
  const auto config = resolve_config(o, o.resume.empty());
  const std::string name = o.name.empty() ? std::string(trainer::arm_name(config.arm)) : o.name;
  std::optional<std::filesystem::path> resume;
  if (!o.resume.empty()) resume = o.resume;
  const auto result = run_experiment(config, o.out.empty() ? "runs" : o.out, name, resume);
  out << "trained " << result.reports.size() << " steps; metrics " << result.metrics.string() << ", checkpoint "
      << result.checkpoint.string() << "\n";
  if (!result.reports.empty()) {
    const auto& last = result.reports.back();
    out << std::setprecision(6) << "first-10% reward " << window_mean(result.reports, false) << ", last-10% reward "
        << window_mean(result.reports, true) << ", input tokens " << last.input_tokens << ", flop tokens "
        << last.flop_tokens << "\n";
  }
  return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out) {
  const auto reports = oracle::run_oracle_suite(o.seed.value_or(1));
  std::ofstream file;
  if (!o.out.empty()) {
    file.open(o.out, std::ios::trunc);
    if (!file) throw UsageError("cannot open " + o.out);
  }
  bool ok = true;
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["check"] = r.name;
    j["instances"] = r.instances;
    j["residual"] = r.residual;
    j["tolerance"] = r.tolerance;
    j["passed"] = r.passed;
    out << j.dump() << "\n";
    if (file) file << j.dump() << "\n";
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitFailure;
}

int cmd_bench(const Options& o, std::ostream& out) {
  if (o.sweep.empty()) throw UsageError("bench needs --sweep {rollouts|length|kl}");
  const auto config = resolve_config(o, true);
  const SweepAxis axis = parse_sweep_axis(o.sweep);
  const std::filesystem::path dir = o.out.empty() ? std::filesystem::path("bench") : std::filesystem::path(o.out);
  const auto cells = sweep_cells(config, axis);
  std::filesystem::create_directories(dir);
  std::ofstream csv(dir / (std::string(sweep_axis_name(axis)) + ".csv"), std::ios::trunc);
  csv << "cell,steps,first_reward,final_reward,input_tokens,flop_tokens\n" << std::setprecision(17);
  for (const auto& cell : cells) {
    const auto result = run_experiment(cell.config, dir, cell.name);
    const auto& last = result.reports.back();
    csv << cell.name << ',' << result.reports.size() << ',' << window_mean(result.reports, false) << ','
        << window_mean(result.reports, true) << ',' << last.input_tokens << ',' << last.flop_tokens << '\n';
    out << std::setprecision(6) << cell.name << ": final-10% reward " << window_mean(result.reports, true) << " ("
        << result.metrics.string() << ")\n";
  }
  return kExitOk;
}

int cmd_compare(const Options& o, std::ostream& out) {
  if (o.inputs.size() < 2) throw UsageError("compare needs at least two metrics files");
  std::vector<RunMetrics> runs;
  for (const auto& path : o.inputs) runs.push_back(load_run(path));
  const auto comparison = compare_runs(std::move(runs), parse_match_mode(o.match));
  write_summary(out, comparison);
  if (!o.out.empty()) {
    const std::filesystem::path dir(o.out);
    std::filesystem::create_directories(dir);
    std::ofstream pairs(dir / "compare.csv", std::ios::trunc);
    write_pairs_csv(pairs, comparison);
    std::ofstream curves(dir / "curves.csv", std::ios::trunc);
    write_curves_csv(curves, comparison);
    if (!pairs || !curves) throw MetricsError("cannot write comparison CSV into " + dir.string());
  }
  return comparison.pairs.empty() ? kExitFailure : kExitOk;
}

int cmd_gen_corpus(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw UsageError("gen-corpus needs --out FILE");
  auto config = resolve_config(o, false);
  if (!o.task.empty()) {
    corpus::parse_task(o.task);
    config.task = o.task;
  }
  if (o.size > 0) config.corpus_size = o.size;
  config.corpus_path.clear();
  const auto docs = trainer::build_corpus(config);
  corpus::write_documents(o.out, docs, trainer::desk_vocabulary());
  out << "wrote " << docs.size() << " " << config.task << " documents to " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"RLP pretraining forge: train, verify, sweep and compare runs", "rlp_forge"};
  app.require_subcommand(1);
  Options o;

  auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", o.seed, "Derive every run seed from N"); };

  auto* train = app.add_subcommand("train", "Train one arm from a config file");
  train->add_option("--config", o.config, "INI run config");
  train->add_option("--arm", o.arm, "rlp, cpt or rpt (overrides [run] arm)")->check(CLI::IsMember({"rlp", "cpt", "rpt"}));
  add_seed(train);
  train->add_option("--out", o.out, "Output directory (default runs)");
  train->add_option("--name", o.name, "Run name (default: the arm)");
  train->add_option("--steps", o.steps, "Override [run] steps");
  train->add_option("--resume", o.resume, "Continue from a checkpoint written by train");

  auto* verify = app.add_subcommand("verify", "Run the exact oracle suite");
  add_seed(verify);
  verify->add_option("--out", o.out, "Also write the reports to this file");

  auto* bench = app.add_subcommand("bench", "Run an ablation sweep, one metrics file per cell");
  bench->add_option("--config", o.config, "INI run config")->required();
  bench->add_option("--sweep", o.sweep, "Sweep axis")->check(CLI::IsMember({"rollouts", "length", "kl"}));
  bench->add_option("--arm", o.arm, "Arm to sweep")->check(CLI::IsMember({"rlp", "cpt", "rpt"}));
  add_seed(bench);
  bench->add_option("--out", o.out, "Output directory (default bench)");

  auto* compare = app.add_subcommand("compare", "Pair runs at matched compute");
  compare->add_option("inputs", o.inputs, "Metrics files")->required();
  compare->add_option("--match", o.match, "Match on input tokens or FLOP tokens")
      ->check(CLI::IsMember({"tokens", "flops"}));
  compare->add_option("--out", o.out, "Directory for compare.csv and curves.csv");

  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic corpus, one document per line");
  gen->add_option("--config", o.config, "INI run config supplying [data]");
  gen->add_option("--task", o.task, "lookup, copy or uniform-noise");
  gen->add_option("--size", o.size, "Number of documents");
  add_seed(gen);
  gen->add_option("--out", o.out, "Output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(o, out);
    if (verify->parsed()) return cmd_verify(o, out);
    if (bench->parsed()) return cmd_bench(o, out);
    if (compare->parsed()) return cmd_compare(o, out);
    if (gen->parsed()) return cmd_gen_corpus(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const trainer::RunConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const CompareError& e) {
    err << "compare error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const model::CheckpointError& e) {
    const bool usage = e.kind() == model::CheckpointError::Kind::ConfigMismatch ||
                       e.kind() == model::CheckpointError::Kind::Io;
    err << "checkpoint error: " << e.what() << "\n";
    return usage ? kExitUsage : kExitFailure;
  } catch (const MetricsError& e) {
    err << "metrics error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "run failed: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace rlp::bench
