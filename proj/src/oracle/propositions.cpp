#include "rlp/oracle/propositions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace rlp::oracle {

double cross_entropy(const Distribution& p, const Distribution& q) {
  if (p.size() != q.size()) throw WorldError("cross-entropy between rows of different length");
  double ce = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) ce -= p[i] * std::log(q[i]);
  return ce;
}

Distribution collapsed_predictor(const CategoricalWorld& world) {
  Distribution out(static_cast<std::size_t>(world.vocab), 0.0);
  for (std::size_t z = 0; z < world.thoughts.size(); ++z) {
    for (std::size_t x = 0; x < out.size(); ++x) out[x] += world.policy[z] * world.predictor[z][x];
  }
  return out;
}

Prop1Report verify_prop1(const CategoricalWorld& world) { return verify_prop1(world, world.chosen); }

Prop1Report verify_prop1(const CategoricalWorld& world, std::size_t thought) {
  world.validate();
  if (thought >= world.thoughts.size()) throw WorldError("thought index out of range");
  const Distribution& p = world.predictor[thought];
  Prop1Report r;
  // Left side: expectation of the realized log-ratio reward.
  for (std::size_t x = 0; x < p.size(); ++x) {
    r.expected_reward += world.data[x] * (std::log(p[x]) - std::log(world.baseline[x]));
  }
  r.ce_reduction = cross_entropy(world.data, world.baseline) - cross_entropy(world.data, p);
  r.residual = std::abs(r.expected_reward - r.ce_reduction);
  r.passed = r.residual < kIdentityTolerance;
  return r;
}

Prop2Report verify_prop2(const CategoricalWorld& world) {
  world.validate();
  const Distribution tilde = collapsed_predictor(world);
  const auto v = static_cast<std::size_t>(world.vocab);
  Prop2Report r;
  r.thought_independent = std::all_of(world.predictor.begin(), world.predictor.end(),
                                      [&](const Distribution& row) { return row == world.predictor.front(); });
  r.max_jensen_gap = -std::numeric_limits<double>::infinity();
  for (std::size_t x = 0; x < v; ++x) {
    double expected_log = 0.0;
    for (std::size_t z = 0; z < world.thoughts.size(); ++z) expected_log += world.policy[z] * std::log(world.predictor[z][x]);
    const double gap = expected_log - std::log(tilde[x]);
    r.max_jensen_gap = std::max(r.max_jensen_gap, gap);
    if (r.thought_independent) r.tightness_residual = std::max(r.tightness_residual, std::abs(gap));
    r.objective += world.data[x] * (expected_log - std::log(world.baseline[x]));
    r.bound += world.data[x] * (std::log(tilde[x]) - std::log(world.baseline[x]));
  }
  for (std::size_t z = 0; z < world.thoughts.size(); ++z) {
    r.objective_via_prop1 += world.policy[z] * verify_prop1(world, z).expected_reward;
  }
  r.passed = r.max_jensen_gap <= kIdentityTolerance && r.objective <= r.bound + kIdentityTolerance &&
             r.objective_via_prop1 <= r.bound + kIdentityTolerance &&
             (!r.thought_independent || r.tightness_residual < kIdentityTolerance);
  return r;
}

ChainReport verify_token_to_seq(const ChainWorld& chain) {
  if (chain.length < 1) throw WorldError("chain length must be at least 1");
  const auto v = static_cast<std::size_t>(chain.vocab);
  const double inv_t = 1.0 / static_cast<double>(chain.length);
  ChainReport r;
  double ce_baseline = 0.0;
  double ce_reasoned = 0.0;
  std::vector<int> seq;

  // Expected tokenwise reward at a prefix: E_{c ~ pi} E_{x ~ p*}[r(c)].
  auto tokenwise = [&](const CategoricalWorld& w) {
    double total = 0.0;
    for (std::size_t z = 0; z < w.thoughts.size(); ++z) {
      double inner = 0.0;
      for (std::size_t x = 0; x < v; ++x) inner += w.data[x] * (std::log(w.predictor[z][x]) - std::log(w.baseline[x]));
      total += w.policy[z] * inner;
    }
    return total;
  };

  std::function<void(double, double, double, double)> walk = [&](double prob, double reward_sum, double log_bar,
                                                                  double log_reasoned) {
    if (static_cast<int>(seq.size()) == chain.length) {
      ++r.sequences;
      r.tokenwise += prob * inv_t * reward_sum;
      ce_baseline += prob * (-inv_t * log_bar);
      ce_reasoned += prob * (-inv_t * log_reasoned);
      return;
    }
    const CategoricalWorld& w = chain.at(seq);
    w.validate();
    const double here = tokenwise(w);
    for (std::size_t x = 0; x < v; ++x) {
      double expected_log = 0.0;
      for (std::size_t z = 0; z < w.thoughts.size(); ++z) expected_log += w.policy[z] * std::log(w.predictor[z][x]);
      seq.push_back(static_cast<int>(x));
      walk(prob * w.data[x], reward_sum + here, log_bar + std::log(w.baseline[x]), log_reasoned + expected_log);
      seq.pop_back();
    }
  };
  walk(1.0, 0.0, 0.0, 0.0);
  r.sequence = ce_baseline - ce_reasoned;
  r.residual = std::abs(r.tokenwise - r.sequence);
  r.passed = r.residual < kChainTolerance;
  return r;
}

}  // namespace rlp::oracle
