#pragma once

#include <cstdint>
#include <stdexcept>

namespace rlp::bench {

class LedgerOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

/// n * l_seq * bs * iters + t_inp, rejecting results beyond 2^63 - 1.
std::uint64_t flop_budget(std::uint64_t n, std::uint64_t l_seq, std::uint64_t bs, std::uint64_t iters,
                          std::uint64_t t_inp);

/// Token counters of one run. The FLOP-token budget is rollout + input.
class ComputeLedger {
 public:
  void add_input(std::uint64_t tokens);
  void add_rollout(std::uint64_t tokens);
  /// Rollout charge of one policy step: G * L_max * B.
  void add_rollout_step(std::uint64_t rollouts, std::uint64_t completion_length, std::uint64_t batch);

  std::uint64_t input_tokens() const { return input_; }
  std::uint64_t rollout_tokens() const { return rollout_; }
  std::uint64_t flop_tokens() const;

  void restore(std::uint64_t input, std::uint64_t rollout);

 private:
  std::uint64_t input_ = 0;
  std::uint64_t rollout_ = 0;
};

}  // namespace rlp::bench
