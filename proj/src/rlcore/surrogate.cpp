#include "rlp/rlcore/surrogate.hpp"

#include "rlp/model/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlp::rlcore {

void ClipParams::validate() const {
  if (!(eps_low >= 0.0) || !(eps_high >= 0.0)) throw std::invalid_argument("clip epsilons must be non-negative");
  if (!(1.0 - eps_low > 0.0)) throw std::invalid_argument("clip lower bound 1 - eps_low must be positive");
  if (inner_epochs < 1) throw std::invalid_argument("inner_epochs must be at least 1");
  if (!(kl_beta >= 0.0)) throw std::invalid_argument("kl_beta must be non-negative");
}

std::vector<double> importance_ratios(const model::ThoughtSample& thought, const model::ParameterSet& current,
                                      std::span<const model::TokenId> prefix) {
  if (thought.tokens.size() != thought.behavior_log_probs.size()) {
    throw std::invalid_argument("thought has " + std::to_string(thought.tokens.size()) + " tokens but " +
                                std::to_string(thought.behavior_log_probs.size()) + " behavior log-probabilities");
  }
  const std::vector<double> now = model::thought_log_probs(current, prefix, thought);
  std::vector<double> out(now.size());
  for (std::size_t u = 0; u < now.size(); ++u) out[u] = std::exp(now[u] - thought.behavior_log_probs[u]);
  return out;
}

double clipped_term(double ratio, double advantage, const ClipParams& clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip.eps_low, 1.0 + clip.eps_high);
  return std::min(ratio * advantage, clipped * advantage);
}

bool clip_binds(double ratio, double advantage, const ClipParams& clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip.eps_low, 1.0 + clip.eps_high);
  return clipped * advantage < ratio * advantage;
}

double clipped_surrogate(std::span<const GroupRecord> groups, const std::vector<std::vector<std::vector<double>>>& ratios,
                         const ClipParams& clip) {
  if (groups.empty()) throw std::invalid_argument("clipped surrogate over an empty group list");
  if (ratios.size() != groups.size()) throw std::invalid_argument("one ratio list per group required");
  double total = 0.0;
  std::size_t members = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const GroupRecord& group = groups[g];
    if (ratios[g].size() != group.size()) throw std::invalid_argument("one ratio list per group member required");
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto& rho = ratios[g][i];
      if (rho.empty()) throw std::invalid_argument("thought without tokens");
      double inner = 0.0;
      for (double r : rho) inner += clipped_term(r, group.advantages[i], clip);
      total += inner / static_cast<double>(rho.size());
      ++members;
    }
  }
  return -total / static_cast<double>(members);
}

numerics::Var surrogate_term(numerics::Graph& graph, numerics::Var chosen, std::span<const double> behavior_log_probs,
                             double advantage, const ClipParams& clip, double weight) {
  const auto n = static_cast<numerics::Index>(behavior_log_probs.size());
  if (graph.rows(chosen) != n || graph.cols(chosen) != 1) {
    throw numerics::ShapeError("surrogate: chosen log-probs must be " + std::to_string(n) + " x 1");
  }
  numerics::Matrix old(n, 1);
  for (numerics::Index u = 0; u < n; ++u) old(u, 0) = behavior_log_probs[static_cast<std::size_t>(u)];
  const auto ratio = graph.exp(graph.sub(chosen, graph.constant(std::move(old))));
  const auto plain = graph.scale(ratio, advantage);
  const auto clipped = graph.scale(graph.clamp(ratio, 1.0 - clip.eps_low, 1.0 + clip.eps_high), advantage);
  return graph.scale(graph.sum(graph.minimum(plain, clipped)), -weight / static_cast<double>(n));
}

}  // namespace rlp::rlcore
