#include "rlp/bench/ledger.hpp"

#include <limits>

namespace rlp::bench {

namespace {

constexpr std::uint64_t kLimit = static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max());

std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > kLimit / a) throw LedgerOverflow("token budget exceeds the 63-bit range");
  return a * b;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (a > kLimit || b > kLimit - a) throw LedgerOverflow("token budget exceeds the 63-bit range");
  return a + b;
}

}  // namespace

std::uint64_t flop_budget(std::uint64_t n, std::uint64_t l_seq, std::uint64_t bs, std::uint64_t iters,
                          std::uint64_t t_inp) {
  return checked_add(checked_mul(checked_mul(checked_mul(n, l_seq), bs), iters), t_inp);
}

void ComputeLedger::add_input(std::uint64_t tokens) { input_ = checked_add(input_, tokens); }

void ComputeLedger::add_rollout(std::uint64_t tokens) { rollout_ = checked_add(rollout_, tokens); }

void ComputeLedger::add_rollout_step(std::uint64_t rollouts, std::uint64_t completion_length, std::uint64_t batch) {
  add_rollout(flop_budget(rollouts, completion_length, batch, 1, 0));
}

std::uint64_t ComputeLedger::flop_tokens() const { return checked_add(rollout_, input_); }

void ComputeLedger::restore(std::uint64_t input, std::uint64_t rollout) {
  checked_add(input, rollout);
  input_ = input;
  rollout_ = rollout;
}

}  // namespace rlp::bench
