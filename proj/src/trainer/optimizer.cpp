#include "rlp/trainer/optimizer.hpp"

#include "rlp/numerics/tensor.hpp"

#include <cmath>

namespace rlp::trainer {

void Optimizer::step(ParameterSet& params, const GradientMap& grads) {
  if (grads.size() != params.tensors().size()) {
    throw numerics::ShapeError("gradient map has " + std::to_string(grads.size()) + " entries for " +
                               std::to_string(params.tensors().size()) + " parameters");
  }
  for (const auto& [name, t] : params.tensors()) {
    auto it = grads.find(name);
    if (it == grads.end()) throw numerics::ShapeError("missing gradient for " + name);
    if (it->second.rows() != t.rows() || it->second.cols() != t.cols()) {
      throw numerics::ShapeError("gradient for " + name + " has the wrong shape");
    }
    if (!it->second.allFinite()) throw numerics::NonFiniteError("non-finite gradient for " + name + "; update rejected");
  }

  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::Sgd) {
    for (auto& [name, t] : params.tensors()) t.values() -= lr * grads.at(name);
  } else {
    ++steps_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
    for (auto& [name, t] : params.tensors()) {
      const numerics::Matrix& g = grads.at(name);
      auto [mit, fresh] = m_.try_emplace(name, numerics::Matrix::Zero(g.rows(), g.cols()));
      auto& v = v_.try_emplace(name, numerics::Matrix::Zero(g.rows(), g.cols())).first->second;
      numerics::Matrix& m = mit->second;
      m = b1 * m + (1.0 - b1) * g;
      v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
      numerics::Matrix delta = (m / c1).array() / ((v / c2).array().sqrt() + config_.epsilon);
      if (config_.weight_decay != 0.0) delta += config_.weight_decay * t.values();
      t.values() -= lr * delta;
    }
    if (!params.finite()) throw numerics::NonFiniteError("optimizer produced non-finite parameters");
  }
  params.bump_version();
}

void Optimizer::write(model::BinaryWriter& w) const {
  w.u64(steps_);
  auto moments = [&](const GradientMap& g) {
    w.u32(static_cast<std::uint32_t>(g.size()));
    for (const auto& [name, m] : g) {
      w.tensor(name, numerics::Tensor({m.rows(), m.cols()}, m));
    }
  };
  moments(m_);
  moments(v_);
}

void Optimizer::read(model::BinaryReader& r) {
  steps_ = r.u64();
  auto moments = [&](GradientMap& g) {
    g.clear();
    for (auto& [name, t] : r.tensors()) g.emplace(name, t.values());
  };
  moments(m_);
  moments(v_);
}

ParameterSet optimizer_step(ParameterSet params, const GradientMap& grads, const OptimizerConfig& config) {
  Optimizer opt(config);
  opt.step(params, grads);
  return params;
}

}  // namespace rlp::trainer
