#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace rlp::oracle {

using Distribution = std::vector<double>;
using Thought = std::vector<int>;

class WorldError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact tables for one prefix x_<t over a vocabulary of at most 8 symbols.
/// Thoughts are every string of length 1..L over the vocabulary.
struct CategoricalWorld {
  int vocab = 2;
  int max_thought_len = 1;
  Distribution data;                    // p*(x | x_<t)
  std::vector<Thought> thoughts;        // Z
  Distribution policy;                  // pi(z | x_<t), aligned with thoughts
  std::vector<Distribution> predictor;  // p(x | x_<t, z), one row per thought
  Distribution baseline;                // pbar(x | x_<t)
  std::size_t chosen = 0;               // the fixed c_t of the CE-reduction identity

  /// Rows sum to 1 within 1e-12, entries strictly positive, shapes aligned.
  void validate() const;
};

inline constexpr int kMaxVocab = 8;
inline constexpr int kMaxThoughtLen = 3;
inline constexpr double kMinEntry = 1e-6;

std::vector<Thought> enumerate_thoughts(int vocab, int max_len);

/// Positive random row: exp of scaled normals, normalized, floored at
/// kMinEntry and renormalized.
Distribution random_distribution(std::uint64_t seed, int size, double spread = 1.5);

struct WorldOptions {
  int vocab = 4;
  int max_thought_len = 2;
  bool thought_independent = false;  // every predictor row equal
};

CategoricalWorld random_world(std::uint64_t seed, const WorldOptions& options = {});

/// Per-position worlds for every prefix of length 0..T-1, keyed by prefix.
struct ChainWorld {
  int vocab = 2;
  int length = 1;
  std::map<std::vector<int>, CategoricalWorld> positions;

  const CategoricalWorld& at(const std::vector<int>& prefix) const;
};

/// Largest V^T a chain may enumerate.
inline constexpr std::uint64_t kEnumerationBudget = 4096;
inline constexpr int kMaxChainLength = 4;

ChainWorld random_chain(std::uint64_t seed, int length, const WorldOptions& options = {});

}  // namespace rlp::oracle
