#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlp::numerics {

using Index = Eigen::Index;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVectorX = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = MatrixX<double>;
using RowVector = RowVectorX<double>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

/// Dense row-major tensor of rank 1 or 2.
///
/// Rank-1 tensors are stored as a single row so that bias vectors broadcast
/// over the rows of a matrix without reshaping.
template <typename Scalar>
class BasicTensor {
 public:
  using Mat = MatrixX<Scalar>;

  BasicTensor() = default;

  explicit BasicTensor(std::vector<Index> shape) : shape_(std::move(shape)) {
    validate_shape(shape_);
    values_ = Mat::Zero(rows(), cols());
  }

  BasicTensor(std::vector<Index> shape, Mat values) : shape_(std::move(shape)), values_(std::move(values)) {
    validate_shape(shape_);
    if (values_.rows() != rows() || values_.cols() != cols()) {
      throw ShapeError("tensor values do not match declared shape");
    }
  }

  static BasicTensor vector(Index n) { return BasicTensor({n}); }
  static BasicTensor matrix(Index r, Index c) { return BasicTensor({r, c}); }

  const std::vector<Index>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  Index rows() const { return shape_.size() == 1 ? 1 : shape_[0]; }
  Index cols() const { return shape_.size() == 1 ? shape_[0] : shape_[1]; }
  Index size() const { return rows() * cols(); }

  Mat& values() { return values_; }
  const Mat& values() const { return values_; }

  bool has_gradient() const { return gradient_.has_value(); }
  Mat& gradient() {
    if (!gradient_) gradient_ = Mat::Zero(rows(), cols());
    return *gradient_;
  }
  const Mat& gradient() const {
    if (!gradient_) throw std::logic_error("tensor has no gradient");
    return *gradient_;
  }
  void clear_gradient() { gradient_.reset(); }

  bool finite() const { return values_.allFinite(); }

  friend bool operator==(const BasicTensor& a, const BasicTensor& b) {
    return a.shape_ == b.shape_ && a.values_ == b.values_;
  }

 private:
  static void validate_shape(const std::vector<Index>& shape) {
    if (shape.empty() || shape.size() > 2) throw ShapeError("tensor rank must be 1 or 2");
    for (Index e : shape) {
      if (e <= 0) throw ShapeError("tensor extents must be positive");
    }
  }

  std::vector<Index> shape_{1};
  Mat values_ = Mat::Zero(1, 1);
  std::optional<Mat> gradient_;
};

using Tensor = BasicTensor<double>;

std::string shape_string(const std::vector<Index>& shape);

}  // namespace rlp::numerics
