#include "rlp/bench/metrics.hpp"

#include <json.hpp>

#include <iomanip>
#include <ostream>
#include <sstream>

namespace rlp::bench {

using nlohmann::ordered_json;

std::string metrics_line(const trainer::StepReport& r) {
  ordered_json j;
  j["step"] = r.step;
  j["arm"] = trainer::arm_name(r.arm);
  j["mean_reward"] = r.mean_reward;
  j["min_reward"] = r.min_reward;
  j["max_reward"] = r.max_reward;
  j["loss"] = r.loss;
  j["mean_thought_len"] = r.mean_thought_len;
  j["truncated_frac"] = r.truncated_frac;
  j["clip_frac"] = r.clip_frac;
  j["input_tokens"] = r.input_tokens;
  j["flop_tokens"] = r.flop_tokens;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

void emit_metrics(const trainer::StepReport& report, std::ostream& sink) {
  sink << metrics_line(report) << '\n';
  sink.flush();
  if (!sink) throw MetricsError("metrics write failed at step " + std::to_string(report.step));
}

MetricsFile::MetricsFile(const std::filesystem::path& path, bool append)
    : path_(path), out_(path, append ? std::ios::app : std::ios::trunc) {
  if (!out_) throw MetricsError("cannot open metrics file " + path.string());
}

void MetricsFile::emit(const trainer::StepReport& report) {
  try {
    emit_metrics(report, out_);
  } catch (const MetricsError& e) {
    throw MetricsError(std::string(e.what()) + " (" + path_.string() + ")");
  }
}

std::vector<trainer::StepReport> parse_metrics(std::istream& in, const std::string& origin) {
  std::vector<trainer::StepReport> out;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno);
    try {
      const auto j = ordered_json::parse(line);
      for (auto field : kMetricFields) {
        if (!j.contains(field)) throw MetricsError(where + ": missing field " + std::string(field));
      }
      trainer::StepReport r;
      r.step = j.at("step").get<std::uint64_t>();
      r.arm = trainer::parse_arm(j.at("arm").get<std::string>());
      r.mean_reward = j.at("mean_reward").get<double>();
      r.min_reward = j.at("min_reward").get<double>();
      r.max_reward = j.at("max_reward").get<double>();
      r.loss = j.at("loss").get<double>();
      r.mean_thought_len = j.at("mean_thought_len").get<double>();
      r.truncated_frac = j.at("truncated_frac").get<double>();
      r.clip_frac = j.at("clip_frac").get<double>();
      r.input_tokens = j.at("input_tokens").get<std::uint64_t>();
      r.flop_tokens = j.at("flop_tokens").get<std::uint64_t>();
      r.wall_ms = j.at("wall_ms").get<double>();
      out.push_back(std::move(r));
    } catch (const MetricsError&) {
      throw;
    } catch (const std::exception& e) {
      throw MetricsError(where + ": " + e.what());
    }
  }
  return out;
}

std::vector<trainer::StepReport> read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MetricsError("cannot read metrics file " + path.string());
  return parse_metrics(in, path.string());
}

void write_metrics_csv(std::ostream& out, std::span<const trainer::StepReport> reports) {
  for (std::size_t i = 0; i < kMetricFields.size(); ++i) out << (i ? "," : "") << kMetricFields[i];
  out << '\n';
  std::ostringstream row;
  row << std::setprecision(17);
  for (const auto& r : reports) {
    row.str("");
    row << r.step << ',' << trainer::arm_name(r.arm) << ',' << r.mean_reward << ',' << r.min_reward << ','
        << r.max_reward << ',' << r.loss << ',' << r.mean_thought_len << ',' << r.truncated_frac << ','
        << r.clip_frac << ',' << r.input_tokens << ',' << r.flop_tokens << ',' << r.wall_ms << '\n';
    out << row.str();
  }
}

}  // namespace rlp::bench
