#pragma once

#include "rlp/trainer/state.hpp"

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rlp::bench {

enum class MatchMode { Tokens, Flops };

MatchMode parse_match_mode(std::string_view name);
std::string_view match_mode_name(MatchMode mode);

/// Relative ledger gap under which two runs count as compute-matched.
inline constexpr double kMatchTolerance = 0.01;

class CompareError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunMetrics {
  std::string name;
  trainer::Arm arm = trainer::Arm::Rlp;
  std::vector<trainer::StepReport> reports;
};

/// Loads one metrics file; every record must carry the same arm.
RunMetrics load_run(const std::filesystem::path& path);

std::uint64_t budget_of(const trainer::StepReport& report, MatchMode mode);

struct MatchedPair {
  std::size_t rlp_run = 0;
  std::size_t other_run = 0;
  std::size_t rlp_record = 0;    // final record of the RLP run
  std::size_t other_record = 0;  // record of the other run closest in budget
  std::uint64_t rlp_budget = 0;
  std::uint64_t other_budget = 0;
  double relative_gap = 0.0;
};

struct Comparison {
  MatchMode mode = MatchMode::Tokens;
  std::vector<RunMetrics> runs;
  std::vector<MatchedPair> pairs;
  std::vector<std::string> unmatched;  // "rlp-run vs other-run: gap" lines
};

/// Pairs the end of every RLP run with the point of every non-RLP run whose
/// ledger counter is closest, keeping pairs within kMatchTolerance. Throws
/// CompareError when no RLP run or no other arm is present.
Comparison compare_runs(std::vector<RunMetrics> runs, MatchMode mode);

void write_summary(std::ostream& out, const Comparison& comparison);
/// One row per matched pair.
void write_pairs_csv(std::ostream& out, const Comparison& comparison);
/// Long-format learning curves of every run for plotting.
void write_curves_csv(std::ostream& out, const Comparison& comparison);

}  // namespace rlp::bench
