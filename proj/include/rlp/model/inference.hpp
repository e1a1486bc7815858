#pragma once

#include "rlp/model/parameters.hpp"
#include "rlp/model/types.hpp"
#include "rlp/numerics/tensor.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace rlp::model {

using numerics::RowVector;

class ContextOverflow : public std::length_error {
 public:
  using std::length_error::length_error;
};

class UnknownToken : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Incremental, gradient-free decoder state over one parameter set.
///
/// Tokens are consumed one at a time with cached keys and values, so a
/// sequence fed in pieces yields the same logits as the same sequence fed at
/// once. Copying a session forks it.
class InferenceSession {
 public:
  explicit InferenceSession(const ParameterSet& params);

  /// Consumes one token; returns the logits for the following position.
  const RowVector& feed(TokenId token);
  void feed(std::span<const TokenId> tokens);

  const RowVector& logits() const;
  std::size_t length() const { return length_; }
  const ParameterSet& parameters() const { return *params_; }

 private:
  struct LayerRefs {
    const Matrix *ln1_gain, *ln1_bias, *wq, *bq, *wk, *bk, *wv, *bv, *wo, *bo;
    const Matrix *ln2_gain, *ln2_bias, *w1, *b1, *w2, *b2;
  };

  const ParameterSet* params_;
  std::vector<LayerRefs> layers_;
  const Matrix *tok_emb_, *pos_emb_, *final_gain_, *final_bias_, *head_w_, *head_b_;
  std::vector<Matrix> keys_;
  std::vector<Matrix> values_;
  std::size_t length_ = 0;
  RowVector logits_;
};

RowVector log_softmax(const RowVector& logits);

/// Log-probabilities of the tempered, masked thought policy at thought step
/// `step` given the model's logits. Temperature 0 yields the greedy one-hot
/// limit (0 on the argmax, kMaskedLogit elsewhere).
RowVector policy_log_probs(const RowVector& logits, int step, double temperature);

/// log p(target | prefix) under teacher forcing.
double score_next_token(const ParameterSet& params, std::span<const TokenId> prefix, TokenId target);

/// Full next-token log-distribution after a prefix.
RowVector next_token_log_probs(const ParameterSet& params, std::span<const TokenId> prefix);

/// Samples a thought after THINK_OPEN. `session` must have consumed the
/// prefix; on return it has also consumed THINK_OPEN and every sampled token.
ThoughtSample sample_thought_from(InferenceSession& session, double temperature, int max_len, std::uint64_t seed);

ThoughtSample sample_thought(const ParameterSet& params, std::span<const TokenId> prefix, double temperature,
                             int max_len, std::uint64_t seed);

/// Recomputes the thought policy's log-probability of each thought token.
std::vector<double> thought_log_probs(const ParameterSet& params, std::span<const TokenId> prefix,
                                      const ThoughtSample& thought);

/// Greedy next token after prefix.
TokenId greedy_next_token(const ParameterSet& params, std::span<const TokenId> prefix);

void check_prefix(const ModelConfig& config, std::span<const TokenId> prefix, std::size_t reserve);

}  // namespace rlp::model
