#include "rlp/baselines/cpt.hpp"

#include "rlp/model/inference.hpp"
#include "rlp/model/transformer.hpp"
#include "rlp/parallel.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace rlp::baselines {

namespace {

bool has_thought_token(const model::PositionContext& ctx) {
  auto is_delim = [](model::TokenId t) { return t == corpus::kThinkOpen || t == corpus::kThinkClose; };
  if (is_delim(ctx.target)) return true;
  for (model::TokenId t : ctx.prefix) {
    if (is_delim(t)) return true;
  }
  return false;
}

}  // namespace

double ntp_loss(const model::ParameterSet& params, std::span<const model::PositionContext> batch) {
  if (batch.empty()) throw std::invalid_argument("ntp_loss over an empty batch");
  double total = 0.0;
  for (const auto& ctx : batch) total -= model::score_next_token(params, ctx.prefix, ctx.target);
  return total / static_cast<double>(batch.size());
}

StepReport ntp_step(TrainerState& state, const std::vector<model::PositionContext>& batch) {
  const auto start = std::chrono::steady_clock::now();
  if (batch.empty()) throw std::invalid_argument("ntp_step on an empty batch");
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (has_thought_token(batch[b])) {
      throw std::invalid_argument("CPT context " + std::to_string(b) + " contains a thought delimiter");
    }
    model::check_prefix(state.params.config(), batch[b].prefix, 0);
  }
  const double weight = 1.0 / static_cast<double>(batch.size());
  struct Partial {
    model::GradientMap grads;
    double loss = 0.0;
  };
  std::vector<Partial> partial(batch.size());
  parallel_for(batch.size(), resolve_threads(state.config.threads), [&](std::size_t b) {
    numerics::Graph graph;
    const model::BoundParameters bound(graph, state.params);
    const numerics::Var lp = model::next_token_log_prob(graph, bound, batch[b].prefix, batch[b].target);
    const numerics::Var loss = graph.scale(lp, -weight);
    partial[b].loss = graph.scalar(loss);
    graph.backpropagate(loss);
    partial[b].grads = bound.gradients(graph);
  });
  model::GradientMap grads = state.params.zero_gradients();
  double loss = 0.0;
  for (const Partial& p : partial) {
    loss += p.loss;
    model::add_into(grads, p.grads);
  }
  if (!std::isfinite(loss)) throw numerics::NonFiniteError("non-finite NTP loss");

  model::ParameterSet params = state.params;
  trainer::Optimizer optimizer = state.optimizer;
  optimizer.step(params, grads);
  bench::ComputeLedger ledger = state.ledger;
  for (const auto& ctx : batch) ledger.add_input(ctx.prefix.size() + 1);

  state.params = std::move(params);
  state.optimizer = std::move(optimizer);
  state.ledger = ledger;

  StepReport report;
  report.step = state.step++;
  report.arm = trainer::Arm::Cpt;
  report.loss = loss;
  report.contexts = batch.size();
  report.input_tokens = state.ledger.input_tokens();
  report.flop_tokens = state.ledger.flop_tokens();
  if (state.config.record_wall_time) {
    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  }
  return report;
}

double sequence_ntp_step(model::ParameterSet& params, trainer::Optimizer& optimizer,
                         std::span<const SequenceExample> batch, int threads) {
  std::size_t count = 0;
  for (const auto& ex : batch) count += ex.targets.size();
  if (count == 0) throw std::invalid_argument("sequence_ntp_step: no training targets");
  const double weight = 1.0 / static_cast<double>(count);
  struct Partial {
    model::GradientMap grads;
    double loss = 0.0;
  };
  std::vector<Partial> partial(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t b) {
    if (batch[b].targets.empty()) return;
    numerics::Graph graph;
    const model::BoundParameters bound(graph, params);
    const numerics::Var lp = model::sequence_log_probs(graph, bound, batch[b].tokens, batch[b].targets);
    const numerics::Var loss = graph.scale(graph.sum(lp), -weight);
    partial[b].loss = graph.scalar(loss);
    graph.backpropagate(loss);
    partial[b].grads = bound.gradients(graph);
  });
  model::GradientMap grads = params.zero_gradients();
  double loss = 0.0;
  for (const Partial& p : partial) {
    if (p.grads.empty()) continue;
    loss += p.loss;
    model::add_into(grads, p.grads);
  }
  if (!std::isfinite(loss)) throw numerics::NonFiniteError("non-finite NTP loss");
  optimizer.step(params, grads);
  return loss;
}

}  // namespace rlp::baselines
