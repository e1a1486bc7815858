#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace rlp::oracle {

/// Outcome of one exact check over many seeded instances.
struct CheckReport {
  std::string name;
  std::size_t instances = 0;
  double residual = 0.0;   // worst measured deviation
  double tolerance = 0.0;
  bool passed = false;
};

CheckReport check_prop1(std::uint64_t seed, std::size_t worlds = 1000);
CheckReport check_prop2_bound(std::uint64_t seed, std::size_t worlds = 1000);
CheckReport check_prop2_tightness(std::uint64_t seed, std::size_t worlds = 1000);
/// The collapsed-predictor bound dominates the objective assembled from per-thought expected rewards.
CheckReport check_prop1_prop2_agreement(std::uint64_t seed, std::size_t worlds = 1000);
CheckReport check_token_to_seq(std::uint64_t seed, std::size_t chains = 100, int vocab = 2, int length = 3);
/// Single-position chains against the expected reward averaged over thoughts.
CheckReport check_chain_single_position(std::uint64_t seed, std::size_t chains = 100);
CheckReport check_advantage_sum(std::uint64_t seed, std::size_t trials = 10000);
CheckReport check_leave_one_out(std::uint64_t seed, std::size_t trials = 10000);
/// Finite-difference and REINFORCE comparisons over the same random problems.
std::pair<CheckReport, CheckReport> check_surrogate_gradient(std::uint64_t seed, std::size_t repetitions = 10);
/// Frozen theta: phi_k against tau^k phi_0 + (1 - tau^k) theta for k <= steps.
CheckReport check_ema_closed_form(std::uint64_t seed, std::size_t steps = 10000, double tau = 0.999);

/// Every check above with its default size.
std::vector<CheckReport> run_oracle_suite(std::uint64_t seed);

}  // namespace rlp::oracle
