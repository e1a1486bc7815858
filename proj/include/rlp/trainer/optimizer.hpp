#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/serialization.hpp"
#include "rlp/trainer/run_config.hpp"

#include <cstdint>

namespace rlp::trainer {

using model::GradientMap;
using model::ParameterSet;

/// Adaptive-moment optimizer with decoupled weight decay, plus a plain
/// gradient-descent mode. Moments are keyed like the parameter map.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config = {}) : config_(config) {}

  /// Applies one update in place and bumps the parameter version. Any
  /// non-finite or misaligned gradient rejects the whole update.
  void step(ParameterSet& params, const GradientMap& grads);

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t steps() const { return steps_; }
  const GradientMap& first_moments() const { return m_; }
  const GradientMap& second_moments() const { return v_; }

  void write(model::BinaryWriter& w) const;
  void read(model::BinaryReader& r);

 private:
  OptimizerConfig config_;
  GradientMap m_;
  GradientMap v_;
  std::uint64_t steps_ = 0;
};

/// Functional form used by tests: copy, update, return.
ParameterSet optimizer_step(ParameterSet params, const GradientMap& grads, const OptimizerConfig& config);

}  // namespace rlp::trainer
