#include "rlp/numerics/gradcheck.hpp"
#include "rlp/numerics/graph.hpp"
#include "rlp/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <vector>

namespace {

using rlp::Rng;
using rlp::numerics::Graph;
using rlp::numerics::Index;
using rlp::numerics::Matrix;
using rlp::numerics::Var;

Matrix random_matrix(Rng& rng, Index r, Index c, double scale = 1.0) {
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

TEST(Graph, ProductValueAndGradient) {
  Graph g;
  Var x = g.input(scalar(2.0));
  Var y = g.input(scalar(3.0));
  Var f = g.sum(g.mul(x, y));
  EXPECT_EQ(g.scalar(f), 6.0);
  g.backpropagate(f);
  EXPECT_EQ(g.gradient(x)(0, 0), 3.0);
  EXPECT_EQ(g.gradient(y)(0, 0), 2.0);
}

TEST(Graph, UniformLogSoftmax) {
  Graph g;
  Var lp = g.log_softmax(g.input(Matrix::Zero(1, 4)));
  for (Index k = 0; k < 4; ++k) EXPECT_NEAR(g.value(lp)(0, k), -std::log(4.0), 1e-15);
}

TEST(Graph, IdentityMatmulLeavesOperand) {
  Rng rng(1);
  Graph g;
  const Matrix a = random_matrix(rng, 3, 4);
  Var p = g.matmul(g.input(a), g.input(Matrix::Identity(4, 4)));
  EXPECT_EQ(g.value(p), a);
}

TEST(Graph, SoftmaxCrossEntropyGradientClosedForm) {
  const Index v = 6;
  Graph g;
  Var logits = g.input(Matrix::Zero(1, v));
  const std::vector<Index> rows{0}, cols{2};
  Var f = g.sum(g.pick(g.log_softmax(logits), rows, cols));
  g.backpropagate(f);
  for (Index k = 0; k < v; ++k) {
    const double expected = (k == 2 ? 1.0 : 0.0) - 1.0 / static_cast<double>(v);
    EXPECT_NEAR(g.gradient(logits)(0, k), expected, 1e-15);
  }
}

TEST(Graph, FanOutAccumulates) {
  Graph g;
  Var x = g.input(scalar(1.5));
  Var f = g.sum(g.add(x, x));
  g.backpropagate(f);
  EXPECT_EQ(g.gradient(x)(0, 0), 2.0);
}

TEST(Graph, ShapeMismatchNamesPrimitive) {
  Graph g;
  Var a = g.input(Matrix::Zero(2, 3));
  Var b = g.input(Matrix::Zero(2, 3));
  try {
    g.matmul(a, b);
    FAIL() << "expected a shape error";
  } catch (const rlp::numerics::ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("matmul"), std::string::npos) << e.what();
  }
}

TEST(Graph, NonFiniteInputRejectedBeforeCompute) {
  Graph g;
  Matrix m = Matrix::Zero(1, 2);
  m(0, 1) = std::nan("");
  EXPECT_THROW(g.input(m), rlp::numerics::NonFiniteError);
}

TEST(Graph, NonScalarRootRejected) {
  Graph g;
  Var a = g.input(Matrix::Zero(2, 2));
  EXPECT_THROW(g.backpropagate(g.exp(a)), std::exception);
}

TEST(Graph, BackpropagateBeforeEvaluateRejected) {
  Graph g(false);
  Var x = g.input(scalar(1.0));
  Var f = g.sum(g.exp(x));
  EXPECT_THROW(g.backpropagate(f), rlp::numerics::GraphStateError);
  g.evaluate();
  g.backpropagate(f);
  EXPECT_DOUBLE_EQ(g.gradient(x)(0, 0), std::exp(1.0));
}

TEST(Graph, ReplayIsBitIdentical) {
  Rng rng(4);
  const Matrix a = random_matrix(rng, 3, 5);
  const Matrix w = random_matrix(rng, 5, 4);
  auto build = [&](Graph& g) {
    Var h = g.gelu(g.matmul(g.input(a), g.input(w)));
    return g.sum(g.log_softmax(h));
  };
  Graph g1, g2;
  Var f1 = build(g1);
  Var f2 = build(g2);
  EXPECT_EQ(g1.scalar(f1), g2.scalar(f2));
  g1.evaluate();
  EXPECT_EQ(g1.scalar(f1), g2.scalar(f2));
}

TEST(GradCheck, SquareClosedForm) {
  Graph g;
  Var x = g.input(scalar(3.0));
  Var f = g.sum(g.mul(x, x));
  g.backpropagate(f);
  EXPECT_NEAR(g.gradient(x)(0, 0), 6.0, 1e-12);
  const std::vector<Var> inputs{x};
  const auto report = rlp::numerics::check_gradient(g, f, inputs, 1e-5, 1e-6);
  EXPECT_TRUE(report.passed) << report.max_relative_error;
}

TEST(GradCheck, ConstantFunctionHasZeroGradient) {
  Graph g;
  Var x = g.input(scalar(0.7));
  Var f = g.sum(g.add(g.scale(x, 0.0), g.constant(scalar(5.0))));
  g.backpropagate(f);
  EXPECT_EQ(g.gradient(x)(0, 0), 0.0);
  const std::vector<Var> inputs{x};
  const auto report = rlp::numerics::check_gradient(g, f, inputs, 1e-5, 1e-4);
  EXPECT_EQ(report.max_absolute_error, 0.0);
}

// Each primitive is wrapped as sum(w .* op(inputs)) with a random weight so
// every output coordinate contributes a distinct gradient.
struct PrimitiveCase {
  const char* name;
  std::function<Var(Graph&, std::vector<Var>&, Rng&)> build;
};

Var weighted(Graph& g, Var out, Rng& rng) {
  const Matrix w = random_matrix(rng, g.rows(out), g.cols(out));
  return g.sum(g.mul(out, g.constant(w)));
}

class PrimitiveGradient : public ::testing::TestWithParam<PrimitiveCase> {};

TEST_P(PrimitiveGradient, MatchesCentralDifferences) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    Rng rng(Rng::derive(77, seed));
    Graph g;
    std::vector<Var> inputs;
    Var out = GetParam().build(g, inputs, rng);
    Var root = weighted(g, out, rng);
    g.backpropagate(root);
    const auto report = rlp::numerics::check_gradient(g, root, inputs, 1e-5, 1e-4);
    EXPECT_TRUE(report.passed) << GetParam().name << " seed " << seed << ": " << report.max_relative_error;
  }
}

Var leaf(Graph& g, std::vector<Var>& inputs, Rng& rng, Index r, Index c, double scale = 1.0) {
  Var v = g.input(random_matrix(rng, r, c, scale));
  inputs.push_back(v);
  return v;
}

const std::vector<Index> kIds{2, 0, 3, 2};

INSTANTIATE_TEST_SUITE_P(
    AllPrimitives, PrimitiveGradient,
    ::testing::Values(
        PrimitiveCase{"matmul", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        return g.matmul(leaf(g, in, r, 3, 4), leaf(g, in, r, 4, 2));
                      }},
        PrimitiveCase{"matmul_transposed", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        return g.matmul_transposed(leaf(g, in, r, 3, 4), leaf(g, in, r, 5, 4));
                      }},
        PrimitiveCase{"add", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        return g.add(leaf(g, in, r, 2, 3), leaf(g, in, r, 2, 3));
                      }},
        PrimitiveCase{"add_row_bias", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        return g.add_row_bias(leaf(g, in, r, 3, 4), leaf(g, in, r, 1, 4));
                      }},
        PrimitiveCase{"sub", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        return g.sub(leaf(g, in, r, 2, 3), leaf(g, in, r, 2, 3));
                      }},
        PrimitiveCase{"mul", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        return g.mul(leaf(g, in, r, 2, 3), leaf(g, in, r, 2, 3));
                      }},
        PrimitiveCase{"scale", [](Graph& g, std::vector<Var>& in, Rng& r) { return g.scale(leaf(g, in, r, 2, 3), -1.7); }},
        PrimitiveCase{"add_scalar",
                      [](Graph& g, std::vector<Var>& in, Rng& r) { return g.add_scalar(leaf(g, in, r, 2, 3), 0.3); }},
        PrimitiveCase{"exp", [](Graph& g, std::vector<Var>& in, Rng& r) { return g.exp(leaf(g, in, r, 2, 3, 0.5)); }},
        PrimitiveCase{"gelu", [](Graph& g, std::vector<Var>& in, Rng& r) { return g.gelu(leaf(g, in, r, 3, 3)); }},
        PrimitiveCase{"minimum", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        return g.minimum(leaf(g, in, r, 3, 3), leaf(g, in, r, 3, 3));
                      }},
        PrimitiveCase{"clamp",
                      [](Graph& g, std::vector<Var>& in, Rng& r) { return g.clamp(leaf(g, in, r, 3, 3), -0.5, 0.5); }},
        PrimitiveCase{"layer_norm", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        return g.layer_norm(leaf(g, in, r, 3, 5), leaf(g, in, r, 1, 5), leaf(g, in, r, 1, 5));
                      }},
        PrimitiveCase{"log_softmax",
                      [](Graph& g, std::vector<Var>& in, Rng& r) { return g.log_softmax(leaf(g, in, r, 3, 5)); }},
        PrimitiveCase{"causal_softmax",
                      [](Graph& g, std::vector<Var>& in, Rng& r) { return g.causal_softmax(leaf(g, in, r, 4, 4)); }},
        PrimitiveCase{"embedding",
                      [](Graph& g, std::vector<Var>& in, Rng& r) { return g.embedding(leaf(g, in, r, 5, 3), kIds); }},
        PrimitiveCase{"slice_cols",
                      [](Graph& g, std::vector<Var>& in, Rng& r) { return g.slice_cols(leaf(g, in, r, 3, 6), 2, 3); }},
        PrimitiveCase{"concat_cols", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        const std::vector<Var> parts{leaf(g, in, r, 3, 2), leaf(g, in, r, 3, 4)};
                        return g.concat_cols(parts);
                      }},
        PrimitiveCase{"gather_rows",
                      [](Graph& g, std::vector<Var>& in, Rng& r) { return g.gather_rows(leaf(g, in, r, 4, 3), kIds); }},
        PrimitiveCase{"pick", [](Graph& g, std::vector<Var>& in, Rng& r) {
                        static const std::vector<Index> rows{0, 1, 1}, cols{2, 0, 2};
                        return g.pick(leaf(g, in, r, 2, 3), rows, cols);
                      }},
        PrimitiveCase{"sum", [](Graph& g, std::vector<Var>& in, Rng& r) { return g.sum(leaf(g, in, r, 3, 2)); }}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(Graph, BackpropIsLinearForPowerOfTwoCoefficients) {
  // Scaling by powers of two is exact, so the identity holds bit-for-bit.
  Rng rng(9);
  const Matrix x0 = random_matrix(rng, 2, 4);
  auto grad = [&](double a, double b) {
    Graph g;
    Var x = g.input(x0);
    Var f = g.sum(g.log_softmax(g.gelu(x)));
    Var h = g.sum(g.mul(g.exp(x), x));
    Var both = g.add(g.scale(f, a), g.scale(h, b));
    g.backpropagate(both);
    return Matrix(g.gradient(x));
  };
  const Matrix gf = grad(1.0, 0.0);
  const Matrix gh = grad(0.0, 1.0);
  const Matrix combined = grad(4.0, -0.5);
  EXPECT_EQ(combined, Matrix(4.0 * gf - 0.5 * gh));
}

TEST(Tensor, ShapeInvariants) {
  using rlp::numerics::Tensor;
  Tensor t({3, 4});
  EXPECT_EQ(t.size(), 12);
  EXPECT_FALSE(t.has_gradient());
  EXPECT_EQ(t.gradient().size(), 12);
  EXPECT_THROW(Tensor({0, 2}), rlp::numerics::ShapeError);
  EXPECT_THROW(Tensor({2, 2, 2}), rlp::numerics::ShapeError);
  EXPECT_THROW(Tensor({2, 2}, Matrix::Zero(3, 2)), rlp::numerics::ShapeError);
}

}  // namespace
