#include "rlp/trainer/policy_step.hpp"

#include "rlp/baselines/rpt.hpp"
#include "rlp/model/inference.hpp"
#include "rlp/model/transformer.hpp"
#include "rlp/parallel.hpp"
#include "rlp/reward/reward.hpp"
#include "rlp/rlcore/kl.hpp"
#include "rlp/rlcore/surrogate.hpp"
#include "rlp/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace rlp::trainer {

std::vector<ScoredGroup> rollout(const ParameterSet& behavior, const ParameterSet* teacher,
                                 const std::vector<model::PositionContext>& batch, const RunConfig& config,
                                 std::uint64_t step, RewardKind kind) {
  const int g = config.rollouts;
  const int max_len = config.model.thought_budget;
  std::vector<ScoredGroup> out(batch.size());
  parallel_for(batch.size(), resolve_threads(config.threads), [&](std::size_t b) {
    const model::PositionContext& ctx = batch[b];
    model::check_prefix(behavior.config(), ctx.prefix, static_cast<std::size_t>(max_len) + 2);
    ScoredGroup& sg = out[b];
    if (kind == RewardKind::InformationGain) sg.s_ema = model::score_next_token(*teacher, ctx.prefix, ctx.target);
    model::InferenceSession base(behavior);
    base.feed(ctx.prefix);
    std::vector<model::ThoughtSample> thoughts;
    std::vector<double> rewards;
    for (int i = 0; i < g; ++i) {
      model::InferenceSession fork = base;
      const std::uint64_t seed = Rng::derive(config.sampling_seed, step, b, static_cast<std::uint64_t>(i));
      thoughts.push_back(model::sample_thought_from(fork, config.temperature, max_len, seed));
      const numerics::RowVector& logits = fork.feed(corpus::kThinkClose);
      if (kind == RewardKind::InformationGain) {
        const double s_pred = model::log_softmax(logits)(ctx.target);
        sg.s_pred.push_back(s_pred);
        rewards.push_back(reward::compute_reward(s_pred, sg.s_ema));
      } else {
        rewards.push_back(baselines::binary_match(logits, ctx.target));
      }
    }
    sg.group = rlcore::make_group(b, std::move(thoughts), std::move(rewards));
  });
  return out;
}

double surrogate_gradient(const ParameterSet& params, const ParameterSet* reference,
                          const std::vector<model::PositionContext>& batch, const std::vector<ScoredGroup>& groups,
                          const rlcore::ClipParams& clip, int threads, GradientMap& grads, std::size_t* clipped_tokens,
                          std::size_t* total_tokens) {
  const bool anchored = clip.kl_beta > 0.0;
  if (anchored && reference == nullptr) throw std::invalid_argument("KL anchor with beta > 0 needs a reference");
  std::size_t members = 0;
  std::size_t positions = 0;
  for (const ScoredGroup& sg : groups) {
    members += sg.group.size();
    for (const auto& t : sg.group.thoughts) positions += t.size();
  }
  if (members == 0) throw std::invalid_argument("surrogate over an empty batch");
  const double weight = 1.0 / static_cast<double>(members);

  struct Partial {
    GradientMap grads;
    double loss = 0.0;
    std::size_t clipped = 0;
    bool any = false;
  };
  std::vector<Partial> partial(groups.size());
  parallel_for(groups.size(), threads, [&](std::size_t b) {
    const rlcore::GroupRecord& group = groups[b].group;
    const model::PositionContext& ctx = batch[group.context];
    Partial& part = partial[b];
    for (std::size_t i = 0; i < group.size(); ++i) {
      const double adv = group.advantages[i];
      // A zero-advantage member contributes an exactly zero surrogate gradient.
      if (adv == 0.0 && !anchored) continue;
      const model::ThoughtSample& thought = group.thoughts[i];
      numerics::Graph graph;
      const model::BoundParameters bound(graph, params);
      const model::PolicyTerms terms = model::thought_policy_terms(graph, bound, ctx.prefix, thought);
      numerics::Var loss = rlcore::surrogate_term(graph, terms.chosen, thought.behavior_log_probs, adv, clip, weight);
      if (anchored) {
        const numerics::Matrix ref = rlcore::thought_policy_rows(*reference, ctx.prefix, thought);
        const numerics::Var kl = rlcore::kl_term(graph, terms.log_probs, ref);
        loss = graph.add(loss, graph.scale(kl, clip.kl_beta / static_cast<double>(positions)));
      }
      const double value = graph.scalar(loss);
      if (!std::isfinite(value)) throw NonFiniteLoss(group.context, value);
      const numerics::Matrix& chosen = graph.value(terms.chosen);
      for (std::size_t u = 0; u < thought.size(); ++u) {
        const double rho = std::exp(chosen(static_cast<numerics::Index>(u), 0) - thought.behavior_log_probs[u]);
        if (rlcore::clip_binds(rho, adv, clip)) ++part.clipped;
      }
      graph.backpropagate(loss);
      bound.accumulate_gradients(graph, part.grads);
      part.loss += value;
      part.any = true;
    }
  });

  grads = params.zero_gradients();
  double loss = 0.0;
  std::size_t clipped = 0;
  for (const Partial& part : partial) {
    loss += part.loss;
    clipped += part.clipped;
    if (part.any) model::add_into(grads, part.grads);
  }
  if (!std::isfinite(loss)) throw NonFiniteLoss(0, loss);
  if (clipped_tokens) *clipped_tokens = clipped;
  if (total_tokens) *total_tokens = positions;
  return loss;
}

StepReport policy_step(TrainerState& state, const std::vector<model::PositionContext>& batch, RewardKind kind) {
  const auto start = std::chrono::steady_clock::now();
  const RunConfig& config = state.config;
  if (batch.empty()) throw std::invalid_argument("policy step on an empty batch");
  if (config.rollouts < 2) throw RunConfigError("rollouts must be at least 2");

  // Stage every mutation on copies so a failure leaves the state untouched.
  const ParameterSet behavior = state.params;
  reward::EmaTeacher teacher = state.teacher;
  if (!teacher.initialized()) teacher.update(state.params);
  const auto phi = teacher.snapshot();

  std::vector<model::PositionContext> used;
  std::size_t filtered = 0;
  if (kind == RewardKind::Binary && config.entropy_threshold > 0.0) {
    for (const auto& ctx : batch) {
      if (baselines::entropy_filter(ctx, teacher, config.entropy_threshold)) {
        used.push_back(ctx);
      } else {
        ++filtered;
      }
    }
  } else {
    used = batch;
  }

  StepReport report;
  report.step = state.step;
  report.arm = kind == RewardKind::Binary ? Arm::Rpt : Arm::Rlp;
  report.contexts = used.size();
  report.filtered = filtered;

  ParameterSet params = state.params;
  Optimizer optimizer = state.optimizer;
  bench::ComputeLedger ledger = state.ledger;
  for (const auto& ctx : batch) ledger.add_input(ctx.prefix.size() + 1);

  if (!used.empty()) {
    const std::vector<ScoredGroup> groups = rollout(behavior, phi.get(), used, config, state.step, kind);
    ledger.add_rollout_step(static_cast<std::uint64_t>(config.rollouts),
                            static_cast<std::uint64_t>(config.model.thought_budget), used.size());

    double total_len = 0.0;
    std::size_t truncated = 0;
    std::size_t members = 0;
    double abs_adv = 0.0;
    double sum_adv = 0.0;
    report.min_reward = groups.front().group.rewards.front();
    report.max_reward = report.min_reward;
    double sum_reward = 0.0;
    for (const ScoredGroup& sg : groups) {
      for (std::size_t i = 0; i < sg.group.size(); ++i) {
        const double r = sg.group.rewards[i];
        report.rewards.push_back(r);
        sum_reward += r;
        report.min_reward = std::min(report.min_reward, r);
        report.max_reward = std::max(report.max_reward, r);
        total_len += static_cast<double>(sg.group.thoughts[i].size());
        truncated += sg.group.thoughts[i].truncated ? 1 : 0;
        abs_adv += std::abs(sg.group.advantages[i]);
        sum_adv += sg.group.advantages[i];
        ++members;
      }
    }
    const double m = static_cast<double>(members);
    report.mean_reward = sum_reward / m;
    report.mean_thought_len = total_len / m;
    report.truncated_frac = static_cast<double>(truncated) / m;
    report.mean_abs_advantage = abs_adv / m;
    report.mean_advantage = sum_adv / m;

    const int threads = resolve_threads(config.threads);
    std::size_t clipped = 0;
    std::size_t tokens = 0;
    for (int epoch = 0; epoch < config.clip.inner_epochs; ++epoch) {
      GradientMap grads;
      const double loss = surrogate_gradient(params, state.reference.get(), used, groups, config.clip, threads, grads,
                                             &clipped, &tokens);
      if (epoch == 0) report.loss = loss;
      optimizer.step(params, grads);
    }
    report.clip_frac = tokens == 0 ? 0.0 : static_cast<double>(clipped) / static_cast<double>(tokens);
    teacher.update(params);
  }

  state.params = std::move(params);
  state.optimizer = std::move(optimizer);
  state.teacher = teacher;
  state.ledger = ledger;
  ++state.step;
  report.input_tokens = state.ledger.input_tokens();
  report.flop_tokens = state.ledger.flop_tokens();
  if (config.record_wall_time) {
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return report;
}

}  // namespace rlp::trainer
