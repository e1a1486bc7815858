#pragma once

#include "rlp/corpus/vocabulary.hpp"

#include <cstddef>
#include <vector>

namespace rlp::model {

using corpus::TokenId;

/// A training position: the observed prefix and the token that follows it.
struct PositionContext {
  std::vector<TokenId> prefix;
  TokenId target = 0;
  std::size_t document = 0;
  std::size_t position = 0;
};

/// A sampled thought. Tokens exclude the bracketing control tokens.
struct ThoughtSample {
  std::vector<TokenId> tokens;
  std::vector<double> behavior_log_probs;
  double temperature = 1.0;
  bool truncated = false;

  std::size_t size() const { return tokens.size(); }
};

/// prefix ++ THINK_OPEN ++ thought ++ THINK_CLOSE
std::vector<TokenId> reasoned_prefix(const std::vector<TokenId>& prefix, const std::vector<TokenId>& thought);

}  // namespace rlp::model
