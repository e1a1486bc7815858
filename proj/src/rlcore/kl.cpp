#include "rlp/rlcore/kl.hpp"

#include "rlp/model/inference.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

namespace rlp::rlcore {

namespace {
std::atomic<std::uint64_t> g_reference_passes{0};
}

std::uint64_t reference_forward_passes() { return g_reference_passes.load(); }

double kl_divergence(const numerics::RowVector& log_p, const numerics::RowVector& log_q) {
  if (log_p.size() != log_q.size()) throw numerics::ShapeError("KL between distributions of different support");
  double total = 0.0;
  for (numerics::Index v = 0; v < log_p.size(); ++v) {
    const double p = std::exp(log_p(v));
    if (p > 0.0) total += p * (log_p(v) - log_q(v));
  }
  return total;
}

numerics::Matrix thought_policy_rows(const model::ParameterSet& params, std::span<const model::TokenId> prefix,
                                     const model::ThoughtSample& thought) {
  model::check_prefix(params.config(), prefix, thought.tokens.size() + 2);
  model::InferenceSession session(params);
  session.feed(prefix);
  session.feed(corpus::kThinkOpen);
  numerics::Matrix rows(static_cast<numerics::Index>(thought.tokens.size()), params.config().vocab_size);
  for (std::size_t u = 0; u < thought.tokens.size(); ++u) {
    rows.row(static_cast<numerics::Index>(u)) =
        model::policy_log_probs(session.logits(), static_cast<int>(u), thought.temperature);
    if (u + 1 < thought.tokens.size()) session.feed(thought.tokens[u]);
  }
  return rows;
}

numerics::Var kl_term(numerics::Graph& graph, numerics::Var log_probs, const numerics::Matrix& reference) {
  if (graph.rows(log_probs) != reference.rows() || graph.cols(log_probs) != reference.cols()) {
    throw numerics::ShapeError("KL term: reference rows do not match the policy");
  }
  const auto p = graph.exp(log_probs);
  return graph.sum(graph.mul(p, graph.sub(log_probs, graph.constant(reference))));
}

double kl_anchor(const model::ParameterSet& current, const model::ParameterSet* reference,
                 std::span<const ThoughtContext> contexts, double beta) {
  if (!(beta >= 0.0)) throw std::invalid_argument("kl_beta must be non-negative");
  if (beta == 0.0) return 0.0;
  if (reference == nullptr) throw std::invalid_argument("KL anchor with beta > 0 needs a reference parameter set");
  double total = 0.0;
  std::size_t positions = 0;
  for (const ThoughtContext& c : contexts) {
    const numerics::Matrix now = thought_policy_rows(current, c.prefix, *c.thought);
    const numerics::Matrix ref = thought_policy_rows(*reference, c.prefix, *c.thought);
    g_reference_passes.fetch_add(1);
    for (numerics::Index u = 0; u < now.rows(); ++u) total += kl_divergence(now.row(u), ref.row(u));
    positions += static_cast<std::size_t>(now.rows());
  }
  return positions == 0 ? 0.0 : beta * total / static_cast<double>(positions);
}

}  // namespace rlp::rlcore
