#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Core>

#include "ginr/rng.hpp"

namespace ginr::detail {

/// y = A x for a symmetric linear operator of dimension n.
using ApplyFn = std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& y)>;

/// Decides whether a Ritz pair (theta, estimated residual norm in operator space) is accurate.
using AcceptFn = std::function<bool(double theta, double residual_estimate)>;

struct RitzPairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // n x want, orthonormal
  Eigen::VectorXd residual_estimates;
  std::size_t restarts = 0;
  bool converged = false;
};

/// Largest `want` eigenpairs of a symmetric operator restricted to the orthogonal complement
/// of the orthonormal columns of `locked`. Thick-restart Lanczos with full (two-pass
/// classical Gram-Schmidt) reorthogonalization; the basis is restarted from the leading Ritz
/// vectors plus the current residual direction when it reaches `basis_size` vectors.
RitzPairs thick_restart_lanczos(std::size_t n, const ApplyFn& apply, std::size_t want, std::size_t basis_size,
                                const Eigen::MatrixXd& locked, const AcceptFn& accept, std::size_t max_restarts,
                                Rng& rng);

}  // namespace ginr::detail
