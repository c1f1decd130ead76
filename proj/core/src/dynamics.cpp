#include "ginr/dynamics.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "ginr/error.hpp"
#include "ginr/io.hpp"
#include "ginr/rng.hpp"

namespace ginr {

using json = nlohmann::json;

void GrayScottParams::validate() const {
  if (!(diffusion_a >= 0.0 && diffusion_b >= 0.0 && feed >= 0.0 && kill >= 0.0))
    throw ContractError("Gray-Scott rates must be non-negative");
  if (!(step_size > 0.0)) throw ContractError("Gray-Scott step size must be positive");
  if (steps < 1) throw ContractError("Gray-Scott needs at least one step");
  if (sample_every < 1) throw ContractError("sample_every must be at least 1");
}

GrayScottState gs_init(std::size_t n, std::uint64_t seed) {
  if (n < 1) throw ContractError("gs_init: n must be positive");
  Rng rng(seed, 0x6773ULL);
  GrayScottState s{Eigen::VectorXd(static_cast<Eigen::Index>(n)), Eigen::VectorXd(static_cast<Eigen::Index>(n))};
  // uniform() can return 0; keep the start strictly inside (0, 1).
  for (auto& v : s.a) v = 1.0 - rng.uniform();
  for (auto& v : s.b) v = 1.0 - rng.uniform();
  return s;
}

namespace {

// L x written as sum_j L_ij (x_j - x_i) + (row sum) x_i, so constants map to zero exactly.
// A row sum at round-off level of the diagonal is a zero-sum (combinatorial) row.
void diffuse(const CsrMatrix& L, const Eigen::VectorXd& x, Eigen::VectorXd& out) {
  const auto offsets = L.row_offsets();
  const auto cols = L.col_indices();
  const auto vals = L.values();
  out.resize(x.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    const double xi = x(static_cast<Eigen::Index>(i));
    double acc = 0.0, row = 0.0, scale = 0.0;
    for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
      row += vals[e];
      scale += std::abs(vals[e]);
      if (cols[e] != i) acc += vals[e] * (x(static_cast<Eigen::Index>(cols[e])) - xi);
    }
    if (std::abs(row) <= 1e-14 * scale) row = 0.0;
    out(static_cast<Eigen::Index>(i)) = acc + row * xi;
  }
}

void check_state(const GrayScottState& s, const CsrMatrix& L) {
  if (s.a.size() != s.b.size() || static_cast<std::size_t>(s.a.size()) != L.size())
    throw ContractError("Gray-Scott state size does not match the Laplacian");
}

}  // namespace

GrayScottState gs_rates(const GrayScottState& s, const CsrMatrix& L, const GrayScottParams& params) {
  check_state(s, L);
  GrayScottState d;
  diffuse(L, s.a, d.a);
  diffuse(L, s.b, d.b);
  const Eigen::ArrayXd abb = s.a.array() * s.b.array() * s.b.array();
  d.a = (-params.diffusion_a * d.a.array() - abb + params.feed * (1.0 - s.a.array())).matrix();
  d.b = (-params.diffusion_b * d.b.array() + abb - (params.feed + params.kill) * s.b.array()).matrix();
  return d;
}

GrayScottState gs_step(const GrayScottState& s, const CsrMatrix& L, const GrayScottParams& params) {
  const GrayScottState d = gs_rates(s, L, params);
  GrayScottState next{s.a + params.step_size * d.a, s.b + params.step_size * d.b};
  if (!next.a.allFinite() || !next.b.allFinite()) throw NumericalError("Gray-Scott state is no longer finite");
  return next;
}

double gs_max_stable_step(const CsrMatrix& L, const GrayScottParams& params) {
  const double d = std::max(params.diffusion_a, params.diffusion_b) * L.gershgorin_bound();
  return d > 0.0 ? 2.0 / d : std::numeric_limits<double>::infinity();
}

GrayScottTrajectory gs_simulate(const Graph& g, const GrayScottParams& params) {
  return gs_simulate(g, params, gs_init(g.num_nodes(), params.seed));
}

GrayScottTrajectory gs_simulate(const Graph& g, const GrayScottParams& params, GrayScottState state) {
  params.validate();
  const CsrMatrix L = laplacian(g, LaplacianKind::combinatorial);
  check_state(state, L);
  GrayScottTrajectory traj;
  for (std::size_t step = 0; step < params.steps; ++step) {
    if (step % params.sample_every == 0) {
      GrayScottFrame frame;
      frame.step = step;
      frame.a = SignalField(state.a, {"a"});
      if (params.record_b) frame.b = SignalField(state.b, {"b"});
      traj.frames.push_back(std::move(frame));
    }
    try {
      state = gs_step(state, L, params);
    } catch (const NumericalError&) {
      throw NumericalError("Gray-Scott integration became non-finite at step " + std::to_string(step + 1) +
                           " (step size " + std::to_string(params.step_size) + ", stable limit about " +
                           std::to_string(gs_max_stable_step(L, params)) + ")");
    }
  }
  traj.final_state = std::move(state);
  return traj;
}

void save_trajectory(const GrayScottTrajectory& traj, const GrayScottParams& params,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["params"] = {{"Da", params.diffusion_a}, {"Db", params.diffusion_b}, {"F", params.feed},
                        {"K", params.kill},         {"h", params.step_size},    {"steps", params.steps},
                        {"sample_every", params.sample_every}};
  manifest["seed"] = params.seed;
  manifest["frames"] = json::array();
  for (const auto& f : traj.frames) {
    const std::string name = "a_" + std::to_string(f.step) + ".gsig";
    save_signal(f.a, dir / name, SignalFormat::binary);
    json entry = {{"step", f.step}, {"a", name}};
    if (f.b.values.size() > 0) {
      const std::string bname = "b_" + std::to_string(f.step) + ".gsig";
      save_signal(f.b, dir / bname, SignalFormat::binary);
      entry["b"] = bname;
    }
    manifest["frames"].push_back(entry);
  }
  save_signal(SignalField(traj.final_state.a, {"a"}), dir / "final_a.gsig", SignalFormat::binary);
  manifest["final"] = {{"step", params.steps}, {"a", "final_a.gsig"}};
  if (params.record_b) {
    save_signal(SignalField(traj.final_state.b, {"b"}), dir / "final_b.gsig", SignalFormat::binary);
    manifest["final"]["b"] = "final_b.gsig";
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw Error("cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

LoadedTrajectory load_trajectory(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw Error("cannot open " + (dir / "manifest.json").string());
  LoadedTrajectory out;
  try {
    const json manifest = json::parse(in);
    for (const auto& f : manifest.at("frames")) {
      out.times.push_back(static_cast<double>(f.at("step").get<std::size_t>()));
      out.frames.push_back(load_signal(dir / f.at("a").get<std::string>()));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed trajectory manifest: ") + e.what());
  }
  if (out.frames.empty()) throw ParseError("trajectory manifest lists no frames");
  return out;
}

}  // namespace ginr
