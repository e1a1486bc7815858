#pragma once

#include "rlp/numerics/graph.hpp"

#include <functional>
#include <span>
#include <string>

namespace rlp::numerics {

struct GradientReport {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t coordinates = 0;
  std::size_t worst_coordinate = 0;
  bool passed = true;
};

/// Relative error with a denominator floor, so coordinates whose gradient is
/// numerically zero are compared on an absolute scale.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Central-difference check of every coordinate of the given input leaves
/// of a scalar-rooted record. The record is replayed for each perturbation
/// and restored afterwards.
GradientReport check_gradient(Graph& graph, Var root, std::span<const Var> inputs, double step, double tolerance);

/// Central-difference check of a scalar function of a flat coordinate span.
/// `coords` is perturbed in place and restored after each evaluation.
GradientReport check_gradient(std::span<double> coords, const std::function<double()>& f,
                              std::span<const double> analytic, double step, double tolerance);

}  // namespace rlp::numerics
