#pragma once

#include "rlp/trainer/state.hpp"

#include <array>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rlp::bench {

/// Record fields in schema order; CSV columns follow the same order.
inline constexpr std::array<std::string_view, 12> kMetricFields = {
    "step",      "arm",         "mean_reward", "min_reward", "max_reward", "loss", "mean_thought_len",
    "truncated_frac", "clip_frac", "input_tokens", "flop_tokens", "wall_ms"};

class MetricsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One JSON object on one line, without the trailing newline.
std::string metrics_line(const trainer::StepReport& report);

/// Appends the record plus newline and flushes; a failed write throws MetricsError.
void emit_metrics(const trainer::StepReport& report, std::ostream& sink);

/// Single-writer metrics file, truncated on open unless appending.
class MetricsFile {
 public:
  explicit MetricsFile(const std::filesystem::path& path, bool append = false);
  void emit(const trainer::StepReport& report);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

/// Parses a metrics file back into reports; only the schema fields are set.
std::vector<trainer::StepReport> read_metrics(const std::filesystem::path& path);
std::vector<trainer::StepReport> parse_metrics(std::istream& in, const std::string& origin = "<stream>");

void write_metrics_csv(std::ostream& out, std::span<const trainer::StepReport> reports);

}  // namespace rlp::bench
