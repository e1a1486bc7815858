#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"
#include "rlp/numerics/graph.hpp"

#include <map>
#include <span>
#include <string>
#include <vector>

namespace rlp::model {

using numerics::Graph;
using numerics::Var;

/// Logit added to tokens the thought policy may not emit.
inline constexpr double kMaskedLogit = -1e9;

/// Parameter leaves of one computation record, keyed like the ParameterSet.
class BoundParameters {
 public:
  BoundParameters(Graph& graph, const ParameterSet& params);

  Var operator[](const std::string& name) const;
  const std::map<std::string, Var>& vars() const { return vars_; }
  const ParameterSet& parameters() const { return *params_; }

  /// Copies the graph's gradient for every parameter into a GradientMap.
  GradientMap gradients(const Graph& graph) const;
  /// Adds the graph's gradients into an accumulator.
  void accumulate_gradients(const Graph& graph, GradientMap& acc) const;

 private:
  const ParameterSet* params_;
  std::map<std::string, Var> vars_;
};

/// Causal decoder trunk; returns the T x width final-normalized hidden states.
Var forward_hidden(Graph& graph, const BoundParameters& params, std::span<const TokenId> tokens);
Var project_logits(Graph& graph, const BoundParameters& params, Var hidden);

/// Causal decoder forward over a token sequence; returns T x V logits.
Var forward_logits(Graph& graph, const BoundParameters& params, std::span<const TokenId> tokens);

/// Additive mask row for thought step `step` (0-based): control tokens other
/// than THINK_CLOSE are never emitted, and THINK_CLOSE is forbidden at step 0
/// so every thought has at least one token.
numerics::RowVector thought_mask(int vocab_size, int step);

struct PolicyTerms {
  Var log_probs;  // L x V log-probabilities of the tempered, masked policy
  Var chosen;     // L x 1 log-probability of each sampled thought token
};

/// Differentiable log pi(l_u | x_<t, l_<u) for every token of a thought.
PolicyTerms thought_policy_terms(Graph& graph, const BoundParameters& params, const std::vector<TokenId>& prefix,
                                 const ThoughtSample& thought);

/// Teacher-forced next-token log-probability at the last position of
/// `prefix` (scalar record value).
Var next_token_log_prob(Graph& graph, const BoundParameters& params, const std::vector<TokenId>& prefix,
                        TokenId target);

/// Teacher-forced log-probabilities of tokens[t] given tokens[0..t) for each
/// listed t >= 1, as a k x 1 record value; one forward pass over the sequence.
Var sequence_log_probs(Graph& graph, const BoundParameters& params, std::span<const TokenId> tokens,
                       std::span<const std::size_t> targets);

}  // namespace rlp::model
