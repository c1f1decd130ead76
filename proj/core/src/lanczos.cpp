#include "lanczos.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "ginr/error.hpp"

namespace ginr::detail {

namespace {

void project_out(const Eigen::MatrixXd& basis, Eigen::Index cols, Eigen::VectorXd& w, Eigen::VectorXd* coeffs) {
  if (cols == 0) return;
  const auto b = basis.leftCols(cols);
  Eigen::VectorXd h = b.transpose() * w;
  w.noalias() -= b * h;
  Eigen::VectorXd h2 = b.transpose() * w;
  w.noalias() -= b * h2;
  if (coeffs) *coeffs = h + h2;
}

// Random unit vector orthogonal to `locked` and to the first `cols` columns of `basis`.
// Returns false when the complement is numerically empty.
bool random_orthogonal(Rng& rng, const Eigen::MatrixXd& locked, const Eigen::MatrixXd& basis, Eigen::Index cols,
                       Eigen::VectorXd& out) {
  for (int attempt = 0; attempt < 3; ++attempt) {
    for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = rng.normal();
    project_out(locked, locked.cols(), out, nullptr);
    project_out(basis, cols, out, nullptr);
    const double norm = out.norm();
    if (norm > 1e-8) {
      out /= norm;
      return true;
    }
  }
  return false;
}

}  // namespace

RitzPairs thick_restart_lanczos(std::size_t n_, const ApplyFn& apply, std::size_t want_, std::size_t basis_size,
                                const Eigen::MatrixXd& locked, const AcceptFn& accept, std::size_t max_restarts,
                                Rng& rng) {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto free_dim = n - locked.cols();
  const auto want = static_cast<Eigen::Index>(want_);
  if (want < 1 || want > free_dim) throw ContractError("Lanczos: requested pair count exceeds the free dimension");
  const Eigen::Index m = std::min<Eigen::Index>(static_cast<Eigen::Index>(basis_size), free_dim);
  if (m < want) throw ContractError("Lanczos: basis smaller than the number of wanted pairs");

  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(n, m + 1);
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd w(n), h;
  Eigen::VectorXd v(n);
  if (!random_orthogonal(rng, locked, V, 0, v)) throw NumericalError("Lanczos: cannot build a start vector");
  V.col(0) = v;

  Eigen::Index kept = 0;
  double scale = 0.0;
  RitzPairs out;
  for (std::size_t restart = 0; restart <= max_restarts; ++restart) {
    double last_beta = 0.0;
    for (Eigen::Index j = kept; j < m; ++j) {
      v = V.col(j);
      apply(v, w);
      project_out(locked, locked.cols(), w, nullptr);
      project_out(V, j + 1, w, &h);
      for (Eigen::Index i = 0; i <= j; ++i) {
        T(i, j) = h(i);
        T(j, i) = h(i);
        scale = std::max(scale, std::abs(h(i)));
      }
      const double beta = w.norm();
      if (beta > 1e-13 * std::max(scale, 1e-300)) {
        V.col(j + 1) = w / beta;
        last_beta = beta;
      } else {
        last_beta = 0.0;
        // Invariant subspace found: continue the basis from a fresh direction.
        if (j + 1 < free_dim && random_orthogonal(rng, locked, V, j + 1, v)) {
          V.col(j + 1) = v;
        } else {
          V.col(j + 1).setZero();
        }
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(T);
    if (eig.info() != Eigen::Success) throw NumericalError("Lanczos: projected eigenproblem failed");
    const Eigen::VectorXd& theta = eig.eigenvalues();   // ascending
    const Eigen::MatrixXd& S = eig.eigenvectors();

    // Descending order view.
    auto col = [&](Eigen::Index r) { return m - 1 - r; };
    bool all_ok = true;
    Eigen::VectorXd estimates(want);
    for (Eigen::Index r = 0; r < want; ++r) {
      estimates(r) = std::abs(last_beta * S(m - 1, col(r)));
      if (!accept(theta(col(r)), estimates(r))) all_ok = false;
    }

    if (all_ok || restart == max_restarts || m == free_dim) {
      Eigen::MatrixXd sel(m, want);
      out.values.resize(want);
      for (Eigen::Index r = 0; r < want; ++r) {
        sel.col(r) = S.col(col(r));
        out.values(r) = theta(col(r));
      }
      out.vectors = V.leftCols(m) * sel;
      out.residual_estimates = estimates;
      out.restarts = restart;
      out.converged = all_ok || m == free_dim;
      return out;
    }

    // Thick restart: keep the leading Ritz vectors, continue from the residual direction.
    const Eigen::Index next_kept = std::min<Eigen::Index>(m - 1, want + (m - want) / 2);
    Eigen::MatrixXd sel(m, next_kept);
    for (Eigen::Index r = 0; r < next_kept; ++r) sel.col(r) = S.col(col(r));
    Eigen::MatrixXd ritz = V.leftCols(m) * sel;
    Eigen::VectorXd residual_dir = V.col(m);
    V.leftCols(next_kept) = ritz;
    T.setZero();
    for (Eigen::Index r = 0; r < next_kept; ++r) T(r, r) = theta(col(r));
    if (last_beta > 0.0) {
      V.col(next_kept) = residual_dir;
    } else if (random_orthogonal(rng, locked, V, next_kept, v)) {
      V.col(next_kept) = v;
    }
    kept = next_kept;
  }
  return out;  // unreachable
}

}  // namespace ginr::detail
