#include "rlp/bench/compare.hpp"

#include "rlp/bench/metrics.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace rlp::bench {

MatchMode parse_match_mode(std::string_view name) {
  if (name == "tokens") return MatchMode::Tokens;
  if (name == "flops") return MatchMode::Flops;
  throw CompareError("unknown match mode '" + std::string(name) + "' (expected tokens or flops)");
}

std::string_view match_mode_name(MatchMode mode) { return mode == MatchMode::Tokens ? "tokens" : "flops"; }

RunMetrics load_run(const std::filesystem::path& path) {
  RunMetrics run;
  run.name = path.stem().string();
  run.reports = read_metrics(path);
  if (run.reports.empty()) throw CompareError("metrics file " + path.string() + " has no records");
  run.arm = run.reports.front().arm;
  for (const auto& r : run.reports) {
    if (r.arm != run.arm) throw CompareError("metrics file " + path.string() + " mixes arms");
  }
  return run;
}

std::uint64_t budget_of(const trainer::StepReport& report, MatchMode mode) {
  return mode == MatchMode::Tokens ? report.input_tokens : report.flop_tokens;
}

namespace {

double gap(std::uint64_t a, std::uint64_t b) {
  if (a == 0 && b == 0) return 0.0;
  const double diff = std::fabs(static_cast<double>(a) - static_cast<double>(b));
  return diff / static_cast<double>(std::max(a, b));
}

}  // namespace

Comparison compare_runs(std::vector<RunMetrics> runs, MatchMode mode) {
  Comparison out;
  out.mode = mode;
  out.runs = std::move(runs);
  bool any_rlp = false, any_other = false;
  for (const auto& r : out.runs) {
    if (r.reports.empty()) throw CompareError("run " + r.name + " has no records");
    (r.arm == trainer::Arm::Rlp ? any_rlp : any_other) = true;
  }
  if (!any_rlp || !any_other) {
    throw CompareError("compare needs at least one rlp run and one cpt or rpt run");
  }
  for (std::size_t i = 0; i < out.runs.size(); ++i) {
    if (out.runs[i].arm != trainer::Arm::Rlp) continue;
    const auto& rlp = out.runs[i];
    const std::uint64_t target = budget_of(rlp.reports.back(), mode);
    for (std::size_t j = 0; j < out.runs.size(); ++j) {
      if (out.runs[j].arm == trainer::Arm::Rlp) continue;
      const auto& other = out.runs[j].reports;
      std::size_t best = 0;
      for (std::size_t k = 1; k < other.size(); ++k) {
        if (gap(budget_of(other[k], mode), target) < gap(budget_of(other[best], mode), target)) best = k;
      }
      MatchedPair p{i, j, rlp.reports.size() - 1, best, target, budget_of(other[best], mode), 0.0};
      p.relative_gap = gap(p.rlp_budget, p.other_budget);
      if (p.relative_gap < kMatchTolerance) {
        out.pairs.push_back(p);
      } else {
        std::ostringstream note;
        note << rlp.name << " vs " << out.runs[j].name << ": closest " << match_mode_name(mode) << " gap "
             << p.relative_gap;
        out.unmatched.push_back(note.str());
      }
    }
  }
  return out;
}

void write_summary(std::ostream& out, const Comparison& c) {
  out << "matched on " << match_mode_name(c.mode) << " (tolerance " << kMatchTolerance * 100 << "%)\n";
  out << std::left << std::setw(20) << "rlp run" << std::setw(20) << "other run" << std::setw(6) << "arm"
      << std::right << std::setw(14) << "rlp budget" << std::setw(14) << "other budget" << std::setw(10) << "gap"
      << std::setw(14) << "rlp reward" << std::setw(14) << "other reward" << std::setw(14) << "rlp loss"
      << std::setw(14) << "other loss" << '\n';
  out << std::fixed << std::setprecision(5);
  for (const auto& p : c.pairs) {
    const auto& a = c.runs[p.rlp_run];
    const auto& b = c.runs[p.other_run];
    const auto& ra = a.reports[p.rlp_record];
    const auto& rb = b.reports[p.other_record];
    out << std::left << std::setw(20) << a.name << std::setw(20) << b.name << std::setw(6) << trainer::arm_name(b.arm)
        << std::right << std::setw(14) << p.rlp_budget << std::setw(14) << p.other_budget << std::setw(10)
        << p.relative_gap << std::setw(14) << ra.mean_reward << std::setw(14) << rb.mean_reward << std::setw(14)
        << ra.loss << std::setw(14) << rb.loss << '\n';
  }
  for (const auto& u : c.unmatched) out << "unmatched: " << u << '\n';
}

void write_pairs_csv(std::ostream& out, const Comparison& c) {
  out << "match,rlp_run,other_run,other_arm,rlp_step,other_step,rlp_budget,other_budget,relative_gap,"
         "rlp_mean_reward,other_mean_reward,rlp_loss,other_loss\n";
  out << std::setprecision(17);
  for (const auto& p : c.pairs) {
    const auto& a = c.runs[p.rlp_run];
    const auto& b = c.runs[p.other_run];
    const auto& ra = a.reports[p.rlp_record];
    const auto& rb = b.reports[p.other_record];
    out << match_mode_name(c.mode) << ',' << a.name << ',' << b.name << ',' << trainer::arm_name(b.arm) << ','
        << ra.step << ',' << rb.step << ',' << p.rlp_budget << ',' << p.other_budget << ',' << p.relative_gap << ','
        << ra.mean_reward << ',' << rb.mean_reward << ',' << ra.loss << ',' << rb.loss << '\n';
  }
}

void write_curves_csv(std::ostream& out, const Comparison& c) {
  out << "run,arm,step,input_tokens,flop_tokens,mean_reward,loss\n";
  out << std::setprecision(17);
  for (const auto& run : c.runs) {
    for (const auto& r : run.reports) {
      out << run.name << ',' << trainer::arm_name(run.arm) << ',' << r.step << ',' << r.input_tokens << ','
          << r.flop_tokens << ',' << r.mean_reward << ',' << r.loss << '\n';
    }
  }
}

}  // namespace rlp::bench
