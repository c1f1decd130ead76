#include "ginr/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "ginr/error.hpp"

namespace ginr {

CsrMatrix::CsrMatrix(std::size_t n, std::vector<std::size_t> row_offsets, std::vector<std::size_t> col_indices,
                     std::vector<double> values)
    : n_(n), offsets_(std::move(row_offsets)), cols_(std::move(col_indices)), values_(std::move(values)) {
  if (offsets_.size() != n_ + 1 || offsets_.front() != 0 || offsets_.back() != cols_.size() ||
      cols_.size() != values_.size())
    throw ContractError("CsrMatrix: inconsistent array sizes");
  for (std::size_t i = 0; i < n_; ++i) {
    if (offsets_[i] > offsets_[i + 1]) throw ContractError("CsrMatrix: row offsets not monotone");
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) {
      if (cols_[e] >= n_) throw ContractError("CsrMatrix: column index out of range");
      if (e > offsets_[i] && cols_[e] <= cols_[e - 1]) throw ContractError("CsrMatrix: unsorted row");
    }
  }
}

void CsrMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < n_; ++i) {
    double acc = 0.0;
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) acc += values_[e] * x[cols_[e]];
    y[i] = acc;
  }
}

Eigen::VectorXd CsrMatrix::operator*(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(n_));
  multiply({x.data(), n_}, {y.data(), n_});
  return y;
}

Eigen::MatrixXd CsrMatrix::operator*(const Eigen::MatrixXd& x) const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, x.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e)
      y.row(i) += values_[e] * x.row(static_cast<Eigen::Index>(cols_[e]));
  }
  return y;
}

double CsrMatrix::coeff(std::size_t i, std::size_t j) const {
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

double CsrMatrix::gershgorin_bound() const {
  double bound = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    double row = 0.0;
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) row += std::abs(values_[e]);
    bound = std::max(bound, row);
  }
  return bound;
}

bool CsrMatrix::is_symmetric(double tol) const {
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e) {
      if (std::abs(values_[e] - coeff(cols_[e], i)) > tol) return false;
    }
  }
  return true;
}

Eigen::MatrixXd CsrMatrix::to_dense() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd dense = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e)
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols_[e])) = values_[e];
  return dense;
}

Eigen::SparseMatrix<double> CsrMatrix::to_eigen() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(values_.size());
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t e = offsets_[i]; e < offsets_[i + 1]; ++e)
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(cols_[e]), values_[e]);
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace ginr
