#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace ginr {

/// Coefficient of determination 1 - SS_res / SS_tot per channel, averaged over channels.
/// nullopt when any channel of the truth has zero variance.
std::optional<double> r2_score(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

double mse(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// I(A;B) / sqrt(H(A) H(B)) with natural logs; 0 when either entropy is 0.
double nmi(std::span<const int> a, std::span<const int> b);

/// Row-wise squared error summed over channels.
Eigen::VectorXd squared_errors(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth);

/// Value at the given percentile (0..100) with linear interpolation between order statistics.
double percentile(std::span<const double> values, double pct);

struct TrimmedR2 {
  std::optional<double> full;
  std::optional<double> trimmed;
  double threshold = 0.0;  // squared-error cutoff
  std::size_t kept = 0;
};

/// R2 over all rows and over rows whose squared error is at or below the given percentile.
TrimmedR2 trimmed_r2(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& truth, double pct = 90.0);

}  // namespace ginr
