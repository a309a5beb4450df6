#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace sheafcoord {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense real matrix with a row-major external layout.
///
/// Restriction maps are tiny at the scales this library targets, so they are
/// stored dense. The row-major layout is the contract used by scenario files.
class LinearMap {
 public:
  LinearMap() = default;

  explicit LinearMap(Matrix m) : m_(std::move(m)) {
    for (Eigen::Index k = 0; k < m_.size(); ++k) {
      if (!std::isfinite(m_.data()[k])) {
        throw std::invalid_argument("LinearMap: entries must be finite");
      }
    }
  }

  LinearMap(std::size_t rows, std::size_t cols, std::span<const double> row_major)
      : LinearMap(from_row_major(rows, cols, row_major)) {}

  static LinearMap identity(std::size_t n) {
    return LinearMap(Matrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)));
  }

  static LinearMap scalar(double a) { return LinearMap(Matrix::Constant(1, 1, a)); }

  std::size_t rows() const { return static_cast<std::size_t>(m_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(m_.cols()); }
  const Matrix& matrix() const { return m_; }

  std::vector<double> row_major() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m_.size()));
    for (Eigen::Index r = 0; r < m_.rows(); ++r)
      for (Eigen::Index c = 0; c < m_.cols(); ++c) out.push_back(m_(r, c));
    return out;
  }

  friend bool operator==(const LinearMap& a, const LinearMap& b) {
    return a.m_.rows() == b.m_.rows() && a.m_.cols() == b.m_.cols() && a.m_ == b.m_;
  }

 private:
  static Matrix from_row_major(std::size_t rows, std::size_t cols, std::span<const double> data) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("LinearMap: rows and cols must be positive");
    if (data.size() != rows * cols) {
      throw std::invalid_argument("LinearMap: expected " + std::to_string(rows * cols) + " entries, got " +
                                  std::to_string(data.size()));
    }
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * cols + c];
    return m;
  }

  Matrix m_;
};

}  // namespace sheafcoord
