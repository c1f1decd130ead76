#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace ginr {

/// Square matrix in compressed sparse row form. Column indices are sorted within each row.
class CsrMatrix {
 public:
  CsrMatrix() = default;
  CsrMatrix(std::size_t n, std::vector<std::size_t> row_offsets, std::vector<std::size_t> col_indices,
            std::vector<double> values);

  std::size_t size() const noexcept { return n_; }
  std::size_t nonzeros() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_offsets() const noexcept { return offsets_; }
  std::span<const std::size_t> col_indices() const noexcept { return cols_; }
  std::span<const double> values() const noexcept { return values_; }

  /// y = A x. Rows are processed in order, so the result is bit-reproducible.
  void multiply(std::span<const double> x, std::span<double> y) const;
  Eigen::VectorXd operator*(const Eigen::VectorXd& x) const;
  /// Y = A X for a dense block of column vectors.
  Eigen::MatrixXd operator*(const Eigen::MatrixXd& x) const;

  /// Entry (i, j), zero when not stored.
  double coeff(std::size_t i, std::size_t j) const;

  /// Maximum absolute row sum, an upper bound on every eigenvalue magnitude.
  double gershgorin_bound() const;

  bool is_symmetric(double tol = 0.0) const;

  Eigen::MatrixXd to_dense() const;
  Eigen::SparseMatrix<double> to_eigen() const;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> values_;
};

}  // namespace ginr
