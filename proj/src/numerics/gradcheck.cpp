#include "rlp/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlp::numerics {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

void record(GradientReport& report, std::size_t coord, double analytic, double numeric) {
  const double rel = relative_error(analytic, numeric);
  const double abs_err = std::abs(analytic - numeric);
  if (rel > report.max_relative_error) {
    report.max_relative_error = rel;
    report.worst_coordinate = coord;
  }
  report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
  ++report.coordinates;
}

}  // namespace

GradientReport check_gradient(Graph& graph, Var root, std::span<const Var> inputs, double step, double tolerance) {
  if (!(step > 0.0)) throw std::invalid_argument("check_gradient: step must be positive");
  if (!graph.evaluated()) graph.evaluate();
  graph.backpropagate(root);

  std::vector<Matrix> analytic;
  analytic.reserve(inputs.size());
  for (Var v : inputs) analytic.push_back(graph.gradient(v));

  GradientReport report;
  std::size_t coord = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    Matrix& x = graph.input_value(inputs[k]);
    for (Index i = 0; i < x.size(); ++i) {
      double& xi = x.data()[i];
      const double saved = xi;
      xi = saved + step;
      graph.evaluate();
      const double up = graph.scalar(root);
      xi = saved - step;
      graph.evaluate();
      const double down = graph.scalar(root);
      xi = saved;
      record(report, coord++, analytic[k].data()[i], (up - down) / (2.0 * step));
    }
  }
  graph.evaluate();
  graph.backpropagate(root);
  report.passed = report.max_relative_error < tolerance;
  return report;
}

GradientReport check_gradient(std::span<double> coords, const std::function<double()>& f,
                              std::span<const double> analytic, double step, double tolerance) {
  if (!(step > 0.0)) throw std::invalid_argument("check_gradient: step must be positive");
  if (coords.size() != analytic.size()) throw std::invalid_argument("check_gradient: gradient length mismatch");
  GradientReport report;
  for (std::size_t i = 0; i < coords.size(); ++i) {
    const double saved = coords[i];
    coords[i] = saved + step;
    const double up = f();
    coords[i] = saved - step;
    const double down = f();
    coords[i] = saved;
    record(report, i, analytic[i], (up - down) / (2.0 * step));
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace rlp::numerics
