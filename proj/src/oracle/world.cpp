#include "rlp/oracle/world.hpp"

#include "rlp/rng.hpp"

#include <cmath>
#include <string>

namespace rlp::oracle {

namespace {

void check_row(const Distribution& row, std::size_t size, const char* what) {
  if (row.size() != size) throw WorldError(std::string(what) + " has the wrong length");
  double total = 0.0;
  for (double p : row) {
    if (!(p > 0.0) || !std::isfinite(p)) throw WorldError(std::string(what) + " has a non-positive entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw WorldError(std::string(what) + " does not sum to 1");
}

std::uint64_t checked_power(int base, int exponent) {
  std::uint64_t out = 1;
  for (int i = 0; i < exponent; ++i) {
    out *= static_cast<std::uint64_t>(base);
    if (out > kEnumerationBudget) return kEnumerationBudget + 1;
  }
  return out;
}

}  // namespace

void CategoricalWorld::validate() const {
  if (vocab < 2 || vocab > kMaxVocab) throw WorldError("world vocabulary must be in [2, 8]");
  if (max_thought_len < 1 || max_thought_len > kMaxThoughtLen) throw WorldError("thought length must be in [1, 3]");
  const auto v = static_cast<std::size_t>(vocab);
  check_row(data, v, "data distribution");
  check_row(baseline, v, "baseline");
  check_row(policy, thoughts.size(), "thought policy");
  if (predictor.size() != thoughts.size()) throw WorldError("one predictor row per thought required");
  for (const auto& row : predictor) check_row(row, v, "predictor row");
  if (chosen >= thoughts.size()) throw WorldError("chosen thought out of range");
}

std::vector<Thought> enumerate_thoughts(int vocab, int max_len) {
  std::vector<Thought> out;
  std::vector<Thought> layer{{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<Thought> next;
    for (const Thought& t : layer) {
      for (int x = 0; x < vocab; ++x) {
        Thought s = t;
        s.push_back(x);
        next.push_back(s);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

Distribution random_distribution(std::uint64_t seed, int size, double spread) {
  Rng rng(seed);
  Distribution d(static_cast<std::size_t>(size));
  double total = 0.0;
  for (double& p : d) {
    p = std::exp(spread * rng.normal());
    total += p;
  }
  double floored = 0.0;
  for (double& p : d) {
    p = std::max(p / total, kMinEntry);
    floored += p;
  }
  for (double& p : d) p /= floored;
  return d;
}

CategoricalWorld random_world(std::uint64_t seed, const WorldOptions& options) {
  CategoricalWorld w;
  w.vocab = options.vocab;
  w.max_thought_len = options.max_thought_len;
  w.thoughts = enumerate_thoughts(w.vocab, w.max_thought_len);
  w.data = random_distribution(Rng::derive(seed, 1), w.vocab);
  w.baseline = random_distribution(Rng::derive(seed, 2), w.vocab);
  w.policy = random_distribution(Rng::derive(seed, 3), static_cast<int>(w.thoughts.size()));
  const Distribution shared = random_distribution(Rng::derive(seed, 4), w.vocab);
  for (std::size_t z = 0; z < w.thoughts.size(); ++z) {
    w.predictor.push_back(options.thought_independent ? shared : random_distribution(Rng::derive(seed, 5, z), w.vocab));
  }
  w.chosen = static_cast<std::size_t>(Rng(Rng::derive(seed, 6)).index(w.thoughts.size()));
  w.validate();
  return w;
}

const CategoricalWorld& ChainWorld::at(const std::vector<int>& prefix) const {
  auto it = positions.find(prefix);
  if (it == positions.end()) throw WorldError("chain has no world for this prefix");
  return it->second;
}

ChainWorld random_chain(std::uint64_t seed, int length, const WorldOptions& options) {
  if (length < 1) throw WorldError("chain length must be at least 1");
  if (length > kMaxChainLength || checked_power(options.vocab, length) > kEnumerationBudget) {
    throw WorldError("enumeration budget exceeded: " + std::to_string(options.vocab) + "^" + std::to_string(length) +
                     " sequences exceeds the cap (T <= " + std::to_string(kMaxChainLength) + ", V^T <= " +
                     std::to_string(kEnumerationBudget) + ")" +
                     "; use a smaller vocabulary or a shorter chain");
  }
  ChainWorld chain;
  chain.vocab = options.vocab;
  chain.length = length;
  std::vector<std::vector<int>> layer{{}};
  std::uint64_t n = 0;
  for (int t = 0; t < length; ++t) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : layer) {
      chain.positions.emplace(prefix, random_world(Rng::derive(seed, 0xc4a1u, n++), options));
      for (int x = 0; x < options.vocab; ++x) {
        auto p = prefix;
        p.push_back(x);
        next.push_back(std::move(p));
      }
    }
    layer = std::move(next);
  }
  return chain;
}

}  // namespace rlp::oracle
