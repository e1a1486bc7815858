#include "rlp/oracle/surrogate_gradient.hpp"

#include "rlp/model/transformer.hpp"
#include "rlp/numerics/gradcheck.hpp"
#include "rlp/rlcore/surrogate.hpp"
#include "rlp/rng.hpp"
#include "rlp/trainer/policy_step.hpp"

#include <algorithm>
#include <cmath>

namespace rlp::oracle {

model::ModelConfig tiny_model_config() {
  model::ModelConfig c;
  c.vocab_size = 12;
  c.context_window = 16;
  c.layers = 2;
  c.width = 8;
  c.heads = 2;
  c.thought_budget = 3;
  c.ff_width = 16;
  return c;
}

SurrogateProblem make_surrogate_problem(std::uint64_t seed, int contexts, int rollouts) {
  const model::ModelConfig cfg = tiny_model_config();
  SurrogateProblem p{model::init_parameters(cfg, Rng::derive(seed, 1)), model::init_parameters(cfg, Rng::derive(seed, 2)),
                     {}, rollouts, 1.0, false, seed};
  // Sharpen the tiny model so rewards and advantages are far from zero.
  for (auto* params : {&p.params, &p.teacher}) {
    for (auto& [name, t] : params->tensors()) {
      if (name.find("gain") == std::string::npos) t.values() *= 8.0;
    }
  }
  Rng rng(Rng::derive(seed, 3));
  for (int b = 0; b < contexts; ++b) {
    model::PositionContext ctx;
    const int len = 2 + static_cast<int>(rng.index(4));
    for (int i = 0; i < len; ++i) ctx.prefix.push_back(corpus::kReservedCount + static_cast<int>(rng.index(8)));
    ctx.target = corpus::kReservedCount + static_cast<int>(rng.index(8));
    ctx.document = static_cast<std::size_t>(b);
    p.batch.push_back(std::move(ctx));
  }
  return p;
}

namespace {

std::vector<trainer::ScoredGroup> groups_for(const SurrogateProblem& problem) {
  trainer::RunConfig config;
  config.model = problem.params.config();
  config.rollouts = problem.rollouts;
  config.temperature = problem.temperature;
  config.sampling_seed = problem.seed;
  config.threads = 1;
  auto groups = trainer::rollout(problem.params, &problem.teacher, problem.batch, config, 0,
                                 trainer::RewardKind::InformationGain);
  if (problem.zero_advantages) {
    for (auto& sg : groups) {
      std::fill(sg.group.rewards.begin(), sg.group.rewards.end(), 0.25);
      sg.group = rlcore::make_group(sg.group.context, std::move(sg.group.thoughts), std::move(sg.group.rewards));
    }
  }
  return groups;
}

double surrogate_value(const model::ParameterSet& params, const SurrogateProblem& problem,
                       const std::vector<trainer::ScoredGroup>& groups, const rlcore::ClipParams& clip) {
  std::vector<rlcore::GroupRecord> records;
  std::vector<std::vector<std::vector<double>>> ratios;
  for (const auto& sg : groups) {
    records.push_back(sg.group);
    auto& per_member = ratios.emplace_back();
    for (const auto& thought : sg.group.thoughts) {
      per_member.push_back(rlcore::importance_ratios(thought, params, problem.batch[sg.group.context].prefix));
    }
  }
  return rlcore::clipped_surrogate(records, ratios, clip);
}

model::GradientMap reinforce_gradient(const SurrogateProblem& problem, const std::vector<trainer::ScoredGroup>& groups) {
  std::size_t members = 0;
  for (const auto& sg : groups) members += sg.group.size();
  model::GradientMap acc = problem.params.zero_gradients();
  for (const auto& sg : groups) {
    const auto& ctx = problem.batch[sg.group.context];
    for (std::size_t i = 0; i < sg.group.size(); ++i) {
      const auto& thought = sg.group.thoughts[i];
      numerics::Graph graph;
      const model::BoundParameters bound(graph, problem.params);
      const auto terms = model::thought_policy_terms(graph, bound, ctx.prefix, thought);
      const double w = -sg.group.advantages[i] / (static_cast<double>(thought.size()) * static_cast<double>(members));
      const auto loss = graph.scale(graph.sum(terms.chosen), w);
      graph.backpropagate(loss);
      bound.accumulate_gradients(graph, acc);
    }
  }
  return acc;
}

}  // namespace

SurrogateGradientReport verify_surrogate_gradient(const SurrogateProblem& problem, double step) {
  const rlcore::ClipParams clip;
  const auto groups = groups_for(problem);
  SurrogateGradientReport report;
  report.parameters = problem.params.parameter_count();

  model::GradientMap analytic;
  report.loss = trainer::surrogate_gradient(problem.params, nullptr, problem.batch, groups, clip, 1, analytic, nullptr,
                                            nullptr);
  const model::GradientMap reinforce = reinforce_gradient(problem, groups);

  model::ParameterSet probe = problem.params;
  for (auto& [name, tensor] : probe.tensors()) {
    const numerics::Matrix& g = analytic.at(name);
    const numerics::Matrix& rg = reinforce.at(name);
    numerics::Matrix& values = tensor.values();
    for (numerics::Index k = 0; k < values.size(); ++k) {
      const double a = g.data()[k];
      report.max_abs_gradient = std::max(report.max_abs_gradient, std::abs(a));
      report.reinforce_error = std::max(report.reinforce_error, numerics::relative_error(a, rg.data()[k]));
      const double saved = values.data()[k];
      values.data()[k] = saved + step;
      const double up = surrogate_value(probe, problem, groups, clip);
      values.data()[k] = saved - step;
      const double down = surrogate_value(probe, problem, groups, clip);
      values.data()[k] = saved;
      report.finite_difference_error =
          std::max(report.finite_difference_error, numerics::relative_error(a, (up - down) / (2.0 * step)));
    }
  }
  report.passed = report.finite_difference_error < kFiniteDifferenceTolerance && report.reinforce_error < kReinforceTolerance;
  return report;
}

}  // namespace rlp::oracle
