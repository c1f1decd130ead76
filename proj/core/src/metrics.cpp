#include "ginr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ginr/error.hpp"

namespace ginr {

namespace {
void check_shapes(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  if (pred.rows() != truth.rows() || pred.cols() != truth.cols())
    throw ContractError("prediction and truth shapes differ");
  if (pred.size() == 0) throw ContractError("empty prediction");
}
}  // namespace

std::optional<double> r2_score(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  check_shapes(pred, truth);
  double total = 0.0;
  for (Eigen::Index c = 0; c < truth.cols(); ++c) {
    const double mean = truth.col(c).mean();
    const double ss_tot = (truth.col(c).array() - mean).square().sum();
    if (!(ss_tot > 0.0)) return std::nullopt;
    const double ss_res = (truth.col(c) - pred.col(c)).squaredNorm();
    total += 1.0 - ss_res / ss_tot;
  }
  return total / static_cast<double>(truth.cols());
}

double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  check_shapes(pred, truth);
  return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

double nmi(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw ContractError("nmi: label vectors differ in length");
  if (a.empty()) return 0.0;
  const double n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  auto entropy = [n](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [label, c] : counts) h -= c / n * std::log(c / n);
    return h;
  };
  const double ha = entropy(ca), hb = entropy(cb);
  if (ha <= 0.0 || hb <= 0.0) return 0.0;
  double mi = 0.0;
  for (const auto& [key, c] : joint) mi += c / n * std::log(c * n / (ca[key.first] * cb[key.second]));
  return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

Eigen::VectorXd squared_errors(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth) {
  check_shapes(pred, truth);
  return (pred - truth).rowwise().squaredNorm();
}

double percentile(std::span<const double> values, double pct) {
  if (values.empty()) throw ContractError("percentile of an empty set");
  if (!(pct >= 0.0 && pct <= 100.0)) throw ContractError("percentile must lie in [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = pct / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

TrimmedR2 trimmed_r2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, double pct) {
  TrimmedR2 out;
  out.full = r2_score(pred, truth);
  const Eigen::VectorXd se = squared_errors(pred, truth);
  out.threshold = percentile(std::span<const double>(se.data(), static_cast<std::size_t>(se.size())), pct);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < se.size(); ++i)
    if (se(i) <= out.threshold) rows.push_back(i);
  out.kept = rows.size();
  Eigen::MatrixXd p(static_cast<Eigen::Index>(rows.size()), pred.cols()), t(p.rows(), pred.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    p.row(static_cast<Eigen::Index>(r)) = pred.row(rows[r]);
    t.row(static_cast<Eigen::Index>(r)) = truth.row(rows[r]);
  }
  out.trimmed = r2_score(p, t);
  return out;
}

}  // namespace ginr
