#include "ginr/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <Eigen/SparseCholesky>

#include "ginr/error.hpp"
#include "ginr/rng.hpp"
#include "lanczos.hpp"

namespace ginr {

namespace {

constexpr double kSignRelTol = 1e-6;

struct Candidate {
  double lambda;
  Eigen::VectorXd vector;
};

std::string residual_summary(const Eigen::VectorXd& r) {
  std::ostringstream out;
  out << "achieved residuals [";
  for (Eigen::Index i = 0; i < r.size(); ++i) out << (i ? ", " : "") << r(i);
  out << "]";
  return out.str();
}

}  // namespace

EigenBasis smallest_eigenpairs(const CsrMatrix& L, std::size_t k, const EigensolverOptions& options) {
  const std::size_t n = L.size();
  if (k < 1 || k >= n) throw ContractError("smallest_eigenpairs: need 1 <= k < n");
  if (!L.is_symmetric(1e-12)) throw ContractError("smallest_eigenpairs: matrix is not symmetric");
  if (!(options.tol > 0.0)) throw ContractError("smallest_eigenpairs: tol must be positive");

  const double c = std::max(L.gershgorin_bound(), 1e-300);
  const double tol = options.tol;
  const bool invert = options.transform == SpectralTransform::shift_invert;
  const double tau = 1e-6 * c;

  detail::ApplyFn apply;
  std::function<double(double)> to_lambda;
  detail::AcceptFn accept;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  if (invert) {
    Eigen::SparseMatrix<double> M = L.to_eigen();
    for (Eigen::Index i = 0; i < M.rows(); ++i) M.coeffRef(i, i) += tau;
    ldlt.compute(M);
    if (ldlt.info() != Eigen::Success) throw NumericalError("smallest_eigenpairs: factorization of L + tau*I failed");
    apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) { y = ldlt.solve(x); };
    to_lambda = [tau](double theta) { return 1.0 / theta - tau; };
    accept = [=](double theta, double est) {
      const double lambda = 1.0 / theta - tau;
      return (c + tau) * est / std::abs(theta) <= 0.1 * tol * std::max(1.0, std::abs(lambda));
    };
  } else {
    apply = [&](const Eigen::VectorXd& x, Eigen::VectorXd& y) {
      y.resize(x.size());
      L.multiply(std::span<const double>(x.data(), x.size()), std::span<double>(y.data(), y.size()));
      y = c * x - y;
    };
    to_lambda = [c](double theta) { return c - theta; };
    accept = [=](double theta, double est) { return est <= 0.1 * tol * std::max(1.0, std::abs(c - theta)); };
  }

  const std::size_t m = options.basis_size ? options.basis_size : std::max<std::size_t>(2 * k + 20, 40);
  Rng rng(options.seed, 0x6c616e637a6f73ULL);

  auto run = [&](std::size_t want, const Eigen::MatrixXd& locked) {
    const std::size_t free_dim = n - static_cast<std::size_t>(locked.cols());
    const std::size_t basis = std::min(std::max(m, want + 1), free_dim);
    auto result = detail::thick_restart_lanczos(n, apply, want, basis, locked, accept, options.max_restarts, rng);
    if (!result.converged) {
      throw NumericalError("smallest_eigenpairs: no convergence after " + std::to_string(options.max_restarts) +
                           " restarts; " + residual_summary(result.residual_estimates));
    }
    std::vector<Candidate> out;
    for (Eigen::Index r = 0; r < result.values.size(); ++r)
      out.push_back({to_lambda(result.values(r)), result.vectors.col(r)});
    return out;
  };

  auto by_lambda = [](const Candidate& a, const Candidate& b) { return a.lambda < b.lambda; };
  std::vector<Candidate> found = run(k, Eigen::MatrixXd(n, 0));
  std::stable_sort(found.begin(), found.end(), by_lambda);

  // A single Krylov sequence sees one direction per eigenspace; search the complement of the
  // current set until nothing strictly below the k-th eigenvalue turns up.
  for (int round = 0; round < 64 && k < n; ++round) {
    Eigen::MatrixXd Q(n, k);
    for (std::size_t i = 0; i < k; ++i) Q.col(static_cast<Eigen::Index>(i)) = found[i].vector;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(Q);
    Q = qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    const std::size_t want = std::min(n - k, std::max<std::size_t>(4, k / 4));
    std::vector<Candidate> extra = run(want, Q);
    const double kth = found[k - 1].lambda;
    const double margin = 10.0 * tol * std::max(1.0, std::abs(kth));
    bool entered = false;
    for (auto& e : extra) {
      if (e.lambda < kth - margin) {
        found.push_back(std::move(e));
        entered = true;
      }
    }
    if (!entered) break;
    std::stable_sort(found.begin(), found.end(), by_lambda);
    found.resize(k);
  }

  // Rayleigh-Ritz on L over the final subspace, then direct residual check.
  Eigen::MatrixXd U(n, k);
  for (std::size_t i = 0; i < k; ++i) U.col(static_cast<Eigen::Index>(i)) = found[i].vector;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(U);
  U = qr.householderQ() * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  const Eigen::MatrixXd LU = L * U;
  Eigen::MatrixXd B = U.transpose() * LU;
  B = 0.5 * (B + B.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> small(B);
  if (small.info() != Eigen::Success) throw NumericalError("smallest_eigenpairs: Rayleigh-Ritz step failed");

  EigenBasis basis;
  basis.eigenvalues = small.eigenvalues();
  basis.eigenvectors = U * small.eigenvectors();
  const Eigen::MatrixXd R = LU * small.eigenvectors() - basis.eigenvectors * basis.eigenvalues.asDiagonal();
  basis.residual_norms = R.colwise().norm().transpose();
  for (Eigen::Index i = 0; i < basis.residual_norms.size(); ++i) {
    if (!(basis.residual_norms(i) <= tol * std::max(1.0, std::abs(basis.eigenvalues(i))))) {
      throw NumericalError("smallest_eigenpairs: residual check failed; " + residual_summary(basis.residual_norms));
    }
  }
  return basis;
}

EigenBasis graph_eigenpairs(const Graph& g, std::size_t k, LaplacianKind kind, const EigensolverOptions& options) {
  if (kind != LaplacianKind::random_walk) {
    EigenBasis basis = smallest_eigenpairs(laplacian(g, kind), k, options);
    basis.laplacian_kind = kind;
    return basis;
  }
  EigenBasis basis = smallest_eigenpairs(laplacian(g, LaplacianKind::symmetric), k, options);
  const std::vector<double> deg = g.degrees();
  for (Eigen::Index i = 0; i < basis.eigenvectors.rows(); ++i)
    basis.eigenvectors.row(i) /= std::sqrt(deg[static_cast<std::size_t>(i)]);
  basis.eigenvectors.colwise().normalize();
  const CsrMatrix Lrw = laplacian(g, LaplacianKind::random_walk);
  const Eigen::MatrixXd R = Lrw * basis.eigenvectors - basis.eigenvectors * basis.eigenvalues.asDiagonal();
  basis.residual_norms = R.colwise().norm().transpose();
  basis.laplacian_kind = LaplacianKind::random_walk;
  return basis;
}

double canonical_sign(std::span<const double> column) {
  double cube = 0.0, cube_abs = 0.0, max_abs = 0.0;
  for (double v : column) {
    cube += v * v * v;
    cube_abs += std::abs(v * v * v);
    max_abs = std::max(max_abs, std::abs(v));
  }
  // A cube sum at the level of eigenvector round-off carries no sign information.
  if (std::abs(cube) >= std::max(1e-12, kSignRelTol * cube_abs)) return cube > 0.0 ? 1.0 : -1.0;
  for (double v : column) {
    if (std::abs(v) >= max_abs * (1.0 - kSignRelTol)) return v >= 0.0 ? 1.0 : -1.0;
  }
  return 1.0;
}

EigenBasis sign_fix(EigenBasis basis) {
  for (Eigen::Index c = 0; c < basis.eigenvectors.cols(); ++c) {
    auto col = basis.eigenvectors.col(c);
    if (canonical_sign(std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))) < 0.0) col = -col;
  }
  return basis;
}

namespace {

// Numerically constant column: snapped to exactly +1 after rescaling.
bool is_constant_column(const Eigen::Ref<const Eigen::VectorXd>& col) {
  if (col.size() == 0) return false;
  const double hi = col.maxCoeff(), lo = col.minCoeff();
  const double scale = col.cwiseAbs().maxCoeff();
  return scale > 0.0 && hi - lo <= 1e-10 * scale;
}

}  // namespace

SpectralEmbedding embed(const EigenBasis& basis, std::uint64_t graph_hash) {
  const EigenBasis fixed = sign_fix(basis);
  SpectralEmbedding emb;
  emb.matrix = std::sqrt(static_cast<double>(fixed.n())) * fixed.eigenvectors;
  for (Eigen::Index c = 0; c < emb.matrix.cols(); ++c)
    if (is_constant_column(emb.matrix.col(c))) emb.matrix.col(c).setOnes();
  emb.eigenvalues = fixed.eigenvalues;
  emb.graph_hash = graph_hash;
  return emb;
}

SpectralEmbedding SpectralEmbedding::leading(std::size_t k) const {
  if (k > this->k()) throw ContractError("leading: k exceeds embedding width");
  SpectralEmbedding out;
  out.matrix = matrix.leftCols(static_cast<Eigen::Index>(k));
  out.eigenvalues = eigenvalues.head(static_cast<Eigen::Index>(k));
  out.graph_hash = graph_hash;
  return out;
}

std::vector<IndexRange> detect_degeneracies(const Eigen::VectorXd& ev, double rel_gap) {
  std::vector<IndexRange> out;
  const auto n = static_cast<std::size_t>(ev.size());
  std::size_t start = 0;
  for (std::size_t i = 0; i + 1 <= n; ++i) {
    const bool joined = i + 1 < n && std::abs(ev(static_cast<Eigen::Index>(i + 1)) - ev(static_cast<Eigen::Index>(i))) <=
                                         rel_gap * std::max(1.0, ev(static_cast<Eigen::Index>(i + 1)));
    if (!joined) {
      if (i > start) out.push_back({start, i});
      start = i + 1;
    }
  }
  return out;
}

std::size_t AlignmentReport::ambiguous_count() const {
  return static_cast<std::size_t>(std::count_if(columns.begin(), columns.end(), [](const auto& c) { return c.ambiguous; }));
}

namespace {

std::vector<double> histogram(const Eigen::Ref<const Eigen::VectorXd>& col, double sign, double range, std::size_t bins) {
  std::vector<double> h(bins, 0.0);
  const double width = 2.0 * range / static_cast<double>(bins);
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    const double x = sign * col(i);
    auto b = static_cast<long long>(std::floor((x + range) / width));
    b = std::clamp<long long>(b, 0, static_cast<long long>(bins) - 1);
    h[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(col.size());
  return h;
}

double l1(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

}  // namespace

AlignedEmbedding align_to_reference(const SpectralEmbedding& ref, const EigenBasis& target,
                                    const AlignmentOptions& options) {
  const std::size_t k = ref.k();
  if (k > target.k()) throw ContractError("align_to_reference: target has fewer columns than the reference");
  if (options.bins == 0) throw ContractError("align_to_reference: bins must be positive");
  const double scale = std::sqrt(static_cast<double>(target.n()));
  const Eigen::MatrixXd full = scale * target.eigenvectors;
  const auto kk = static_cast<Eigen::Index>(k);

  AlignedEmbedding out;
  out.embedding.matrix.resize(full.rows(), kk);
  out.embedding.eigenvalues = target.eigenvalues.head(kk);
  out.report.columns.resize(k);

  for (Eigen::Index c = 0; c < kk; ++c) {
    auto& rep = out.report.columns[static_cast<std::size_t>(c)];
    rep.column = static_cast<std::size_t>(c);
    const auto t = full.col(c);
    const auto r = ref.matrix.col(c);
    if (is_constant_column(t)) {
      rep.sign = canonical_sign(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
      out.embedding.matrix.col(c).setOnes();
      continue;
    }
    const double range = std::max(t.cwiseAbs().maxCoeff(), r.cwiseAbs().maxCoeff());
    const auto href = histogram(r, 1.0, range, options.bins);
    rep.distance_kept = l1(histogram(t, 1.0, range, options.bins), href);
    rep.distance_flipped = l1(histogram(t, -1.0, range, options.bins), href);
    const double lo = std::min(rep.distance_kept, rep.distance_flipped);
    const double hi = std::max(rep.distance_kept, rep.distance_flipped);
    rep.ambiguous = hi > 0.0 && lo / hi > options.ambiguity_ratio;
    if (rep.distance_kept < rep.distance_flipped) {
      rep.sign = 1.0;
    } else if (rep.distance_flipped < rep.distance_kept) {
      rep.sign = -1.0;
    } else {
      rep.sign = canonical_sign(std::span<const double>(t.data(), static_cast<std::size_t>(t.size())));
    }
    if (rep.ambiguous && options.anchors) {
      const auto& a = *options.anchors;
      double dot = 0.0;
      for (std::size_t i = 0; i < a.target.size(); ++i)
        dot += full(static_cast<Eigen::Index>(a.target[i]), c) * ref.matrix(static_cast<Eigen::Index>(a.reference[i]), c);
      if (dot != 0.0) {
        rep.sign = dot > 0.0 ? 1.0 : -1.0;
        rep.anchored = true;
      }
    }
    out.embedding.matrix.col(c) = rep.sign * t;
  }

  // Degenerate blocks are detected over every target column so that a block cut by k is
  // seen whole when it is resolved through anchors.
  const auto blocks = detect_degeneracies(target.eigenvalues, options.degeneracy_rel_gap);
  for (const auto& block : blocks) {
    if (block.first >= k) continue;
    const IndexRange visible{block.first, std::min(block.last, k - 1)};
    out.report.degenerate_blocks.push_back(visible);
    for (std::size_t c = visible.first; c <= visible.last; ++c) out.report.columns[c].degenerate = true;
    if (!options.anchors) continue;

    const auto& a = *options.anchors;
    const auto s = static_cast<Eigen::Index>(a.target.size());
    const auto bt = static_cast<Eigen::Index>(block.size());
    const auto br = static_cast<Eigen::Index>(visible.size());
    Eigen::MatrixXd F(s, bt), R(s, br);
    for (Eigen::Index i = 0; i < s; ++i) {
      const auto ti = static_cast<Eigen::Index>(a.target[static_cast<std::size_t>(i)]);
      const auto ri = static_cast<Eigen::Index>(a.reference[static_cast<std::size_t>(i)]);
      F.row(i) = full.row(ti).segment(static_cast<Eigen::Index>(block.first), bt);
      R.row(i) = ref.matrix.row(ri).segment(static_cast<Eigen::Index>(visible.first), br);
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(F.transpose() * R, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::MatrixXd W = svd.matrixU() * svd.matrixV().transpose();  // bt x br, orthonormal columns
    out.embedding.matrix.middleCols(static_cast<Eigen::Index>(visible.first), br) =
        full.middleCols(static_cast<Eigen::Index>(block.first), bt) * W;
    for (std::size_t c = visible.first; c <= visible.last; ++c) {
      out.report.columns[c].anchored = true;
      out.report.columns[c].sign = 1.0;
    }
  }
  return out;
}

bool is_almost_trivial(std::span<const double> column, double flatness_threshold) {
  if (column.empty()) return true;
  std::vector<double> sorted(column.begin(), column.end());
  const std::size_t n = sorted.size();
  std::sort(sorted.begin(), sorted.end());
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  const double eps = 1e-6 * std::sqrt(static_cast<double>(n));
  std::size_t spread = 0;
  for (double v : column)
    if (std::abs(v - median) > eps) ++spread;
  return static_cast<double>(spread) < flatness_threshold * static_cast<double>(n);
}

TruncatedEmbedding truncate_trivial(const SpectralEmbedding& emb, double flatness_threshold) {
  TruncatedEmbedding out;
  Eigen::Index first = 0;
  for (; first < emb.matrix.cols(); ++first) {
    const auto col = emb.matrix.col(first);
    if (!is_almost_trivial(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), flatness_threshold))
      break;
    out.dropped.push_back(static_cast<std::size_t>(first));
  }
  if (first == emb.matrix.cols()) throw ContractError("truncate_trivial: every column is almost trivial");
  out.embedding.matrix = emb.matrix.rightCols(emb.matrix.cols() - first);
  out.embedding.eigenvalues = emb.eigenvalues.tail(emb.eigenvalues.size() - first);
  out.embedding.graph_hash = emb.graph_hash;
  return out;
}

EigenBasis basis_from_embedding(const SpectralEmbedding& emb) {
  EigenBasis b;
  b.eigenvalues = emb.eigenvalues;
  b.eigenvectors = emb.matrix / std::sqrt(static_cast<double>(emb.n()));
  b.residual_norms = Eigen::VectorXd::Zero(emb.matrix.cols());
  return b;
}

}  // namespace ginr
