#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "ginr/graph.hpp"
#include "ginr/sparse.hpp"

namespace ginr {

/// Gray-Scott reaction-diffusion on a graph. Defaults are the "coral" regime.
struct GrayScottParams {
  double diffusion_a = 0.64;
  double diffusion_b = 0.32;
  double feed = 0.06;
  double kill = 0.062;
  double step_size = 1.0;
  std::size_t steps = 10000;
  std::size_t sample_every = 10;
  std::uint64_t seed = 0;
  bool record_b = false;

  void validate() const;
};

struct GrayScottState {
  Eigen::VectorXd a;
  Eigen::VectorXd b;
};

/// a, b ~ U(0, 1) elementwise.
GrayScottState gs_init(std::size_t n, std::uint64_t seed);

/// Rates of change:
///   da = -Da L a - a.b.b + F (1 - a),   db = -Db L b + a.b.b - (F + K) b
GrayScottState gs_rates(const GrayScottState& state, const CsrMatrix& laplacian,
                        const GrayScottParams& params);

/// One explicit Euler step: a += h da, b += h db. Throws NumericalError if the new state is
/// not finite.
GrayScottState gs_step(const GrayScottState& state, const CsrMatrix& laplacian,
                       const GrayScottParams& params);

/// Largest explicit Euler step for which the diffusion part is stable,
/// 2 / (max(Da, Db) * c) with c the Gershgorin bound of L. Infinity without diffusion.
double gs_max_stable_step(const CsrMatrix& laplacian, const GrayScottParams& params);

struct GrayScottFrame {
  std::size_t step = 0;
  SignalField a;
  SignalField b;  // empty unless record_b
};

struct GrayScottTrajectory {
  std::vector<GrayScottFrame> frames;  // states at steps 0, s, 2s, ... < steps
  GrayScottState final_state;          // after `steps` updates
};

/// Runs from gs_init(n, seed) on the combinatorial Laplacian of `g`. Throws NumericalError
/// naming the step at which the state left the finite range.
GrayScottTrajectory gs_simulate(const Graph& g, const GrayScottParams& params);
GrayScottTrajectory gs_simulate(const Graph& g, const GrayScottParams& params,
                                GrayScottState initial);

/// Directory layout: a_<step>.gsig (and b_<step>.gsig), final_a.gsig, manifest.json.
void save_trajectory(const GrayScottTrajectory& traj, const GrayScottParams& params,
                     const std::filesystem::path& dir);

struct LoadedTrajectory {
  std::vector<double> times;
  std::vector<SignalField> frames;
};
LoadedTrajectory load_trajectory(const std::filesystem::path& dir);

}  // namespace ginr
