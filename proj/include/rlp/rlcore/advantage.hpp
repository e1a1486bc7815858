#pragma once

#include "rlp/model/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace rlp::rlcore {

/// A_i = G/(G-1) * (r_i - mean(r)). Throws for G < 2.
std::vector<double> group_advantages(std::span<const double> rewards);

/// G thoughts sampled for one context, with their rewards and advantages.
struct GroupRecord {
  std::size_t context = 0;
  std::vector<model::ThoughtSample> thoughts;
  std::vector<double> rewards;
  double mean_reward = 0.0;
  std::vector<double> advantages;

  std::size_t size() const { return thoughts.size(); }
};

GroupRecord make_group(std::size_t context, std::vector<model::ThoughtSample> thoughts, std::vector<double> rewards);

}  // namespace rlp::rlcore
