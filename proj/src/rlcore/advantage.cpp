#include "rlp/rlcore/advantage.hpp"

#include <stdexcept>
#include <string>

namespace rlp::rlcore {

std::vector<double> group_advantages(std::span<const double> rewards) {
  const std::size_t g = rewards.size();
  if (g < 2) throw std::invalid_argument("group advantages need at least 2 rollouts, got " + std::to_string(g));
  double total = 0.0;
  for (double r : rewards) total += r;
  const double mean = total / static_cast<double>(g);
  const double scale = static_cast<double>(g) / static_cast<double>(g - 1);
  std::vector<double> out(g);
  for (std::size_t i = 0; i < g; ++i) out[i] = scale * (rewards[i] - mean);
  return out;
}

GroupRecord make_group(std::size_t context, std::vector<model::ThoughtSample> thoughts, std::vector<double> rewards) {
  if (thoughts.size() != rewards.size()) throw std::invalid_argument("group: one reward per thought required");
  GroupRecord g;
  g.context = context;
  g.advantages = group_advantages(rewards);
  double total = 0.0;
  for (double r : rewards) total += r;
  g.mean_reward = total / static_cast<double>(rewards.size());
  g.thoughts = std::move(thoughts);
  g.rewards = std::move(rewards);
  return g;
}

}  // namespace rlp::rlcore
