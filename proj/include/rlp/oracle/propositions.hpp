#pragma once

#include "rlp/oracle/world.hpp"

#include <string>

namespace rlp::oracle {

inline constexpr double kIdentityTolerance = 1e-12;
inline constexpr double kChainTolerance = 1e-10;

double cross_entropy(const Distribution& p, const Distribution& q);

/// Collapsed predictor p~(x) = sum_z pi(z) p(x | z).
Distribution collapsed_predictor(const CategoricalWorld& world);

struct Prop1Report {
  double expected_reward = 0.0;  // E_{x ~ p*}[log p(x | c) - log pbar(x)]
  double ce_reduction = 0.0;     // CE(p*, pbar) - CE(p*, p(.|c))
  double residual = 0.0;
  bool passed = false;
};

/// CE-reduction identity at the world's chosen thought.
Prop1Report verify_prop1(const CategoricalWorld& world);
Prop1Report verify_prop1(const CategoricalWorld& world, std::size_t thought);

struct Prop2Report {
  double max_jensen_gap = 0.0;  // max_x (E_z log p(x|z) - log p~(x)); <= 0 when the bound holds
  double objective = 0.0;       // J = E_x E_z [log p(x|z) - log pbar(x)]
  double bound = 0.0;           // E_x [log p~(x) - log pbar(x)]
  double objective_via_prop1 = 0.0;  // sum_z pi(z) * expected reward at z
  double tightness_residual = 0.0;   // |gap| when the predictor ignores the thought, else 0
  bool thought_independent = false;
  bool passed = false;
};

Prop2Report verify_prop2(const CategoricalWorld& world);

struct ChainReport {
  double tokenwise = 0.0;  // average over positions of expected tokenwise rewards
  double sequence = 0.0;   // CE_seq(p*, pbar) - CE_seq(p*, p[pi])
  double residual = 0.0;
  std::uint64_t sequences = 0;
  bool passed = false;
};

/// Tokenwise-to-sequence identity by full enumeration of the chain.
ChainReport verify_token_to_seq(const ChainWorld& chain);

}  // namespace rlp::oracle
