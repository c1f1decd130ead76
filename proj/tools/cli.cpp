#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "ginr/checkpoint.hpp"
#include "ginr/dynamics.hpp"
#include "ginr/error.hpp"
#include "ginr/experiments.hpp"
#include "ginr/io.hpp"
#include "ginr/metrics.hpp"
#include "ginr/spectral.hpp"
#include "ginr/trainer.hpp"

namespace ginr::cli {

using json = nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  return s.substr(first, s.find_last_not_of(" \t\r\n") - first + 1);
}

std::vector<std::string> split_list(const std::string& text, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ContractError("invalid number '" + s + "' in " + what);
}

std::size_t to_size(const std::string& s, const std::string& what) {
  const double v = to_double(s, what);
  if (!(v >= 0.0) || v != std::floor(v)) throw ContractError("invalid count '" + s + "' in " + what);
  return static_cast<std::size_t>(v);
}

// Prints integral values with a trailing ".0" so numbers always read as reals.
std::string format_real(double v) {
  char buf[64];
  std::string s(buf, std::to_chars(buf, buf + sizeof buf, v).ptr);
  if (std::isfinite(v) && s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Writes the report to `path`, or to `out` when no path was given.
void emit_report(const json& report, const std::string& path, std::ostream& out) {
  if (path.empty())
    out << report.dump(2) << '\n';
  else
    write_text(path, report.dump(2) + "\n");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

SplitFractions parse_split(const std::string& text) {
  if (text == "none" || text == "all") return {};
  const auto parts = split_list(text, '/');
  if (parts.size() != 3) throw ContractError("split must be 'none' or 'train/val/test' percentages, got '" + text + "'");
  const double a = to_double(parts[0], "--split"), b = to_double(parts[1], "--split"), c = to_double(parts[2], "--split");
  const double total = a + b + c;
  if (!(total > 0.0)) throw ContractError("split percentages must be positive");
  return {a / total, b / total, c / total};
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) out.push_back(to_size(item, "--k-list"));
  if (out.empty()) throw ContractError("--k-list is empty");
  return out;
}

// ---------------------------------------------------------------------------------------------
// Shared model and optimizer flags.

struct ModelFlags {
  std::string arch = "sine";
  std::size_t layers = 6;
  std::size_t width = 512;
  std::string skip_layer = "middle";
  double omega0 = 30.0;
  std::string lr = "auto";
  std::size_t batch = 5000;
  std::size_t steps = 10000;
  std::size_t anneal_patience = 1000;
  std::size_t early_stop = 1000;
  std::size_t eval_every = 10;
  double target_loss = 0.0;
  std::string split = "none";
  std::uint64_t seed = 0;
};

void add_model_flags(CLI::App* app, ModelFlags& f) {
  app->add_option("--arch", f.arch, "Activation: sine or relu")
      ->check(CLI::IsMember({"sine", "siren", "relu"}))
      ->capture_default_str();
  app->add_option("--layers", f.layers, "Network depth in layers (affine maps = layers - 1)")->capture_default_str();
  app->add_option("--width", f.width, "Hidden width")->capture_default_str();
  app->add_option("--skip-layer", f.skip_layer, "Layer receiving the input skip: index, 'middle' or 'none'")
      ->capture_default_str();
  app->add_option("--omega0", f.omega0, "Sine frequency factor")->capture_default_str();
  app->add_option("--lr", f.lr, "Learning rate; 'auto' is 1e-4 for sine and 1e-3 for relu")->capture_default_str();
  app->add_option("--batch", f.batch, "Mini-batch size")->capture_default_str();
  app->add_option("--steps", f.steps, "Maximum optimizer steps")->capture_default_str();
  app->add_option("--anneal-patience", f.anneal_patience, "Halve the learning rate after this many steps without improvement")
      ->capture_default_str();
  app->add_option("--early-stop", f.early_stop, "Validation patience in steps (with a validation split)")
      ->capture_default_str();
  app->add_option("--eval-every", f.eval_every, "Validation interval in steps")->capture_default_str();
  app->add_option("--target-loss", f.target_loss, "Stop once the batch loss reaches this value (0 disables)")
      ->capture_default_str();
  app->add_option("--split", f.split, "'none' or train/val/test percentages such as 80/10/10")->capture_default_str();
  app->add_option("--seed", f.seed, "Seed for initialization, splits and batches")->capture_default_str();
}

MLPConfig model_config(const ModelFlags& f) {
  MLPConfig c;
  c.activation = parse_activation(f.arch);
  c.depth = f.layers;
  c.width = f.width;
  c.omega0 = f.omega0;
  c.init_seed = f.seed;
  if (f.skip_layer == "none")
    c.skip_layer.reset();
  else if (f.skip_layer == "middle")
    c.skip_layer = f.layers >= 4 ? std::optional<std::size_t>(f.layers / 2) : std::nullopt;
  else
    c.skip_layer = to_size(f.skip_layer, "--skip-layer");
  return c;
}

double resolved_lr(const ModelFlags& f) {
  if (f.lr != "auto") return to_double(f.lr, "--lr");
  return parse_activation(f.arch) == Activation::relu ? 1e-3 : 1e-4;
}

TrainConfig train_config(const ModelFlags& f) {
  TrainConfig t;
  t.lr = resolved_lr(f);
  t.batch_size = f.batch;
  t.max_steps = f.steps;
  t.anneal_patience = f.anneal_patience;
  t.early_stop_patience = f.early_stop;
  t.eval_every = f.eval_every;
  t.target_loss = f.target_loss;
  t.seed = f.seed;
  t.split = parse_split(f.split);
  t.validate();
  return t;
}

json model_flags_json(const ModelFlags& f) {
  const MLPConfig c = model_config(f);
  return {{"arch", std::string(to_string(c.activation))},
          {"layers", c.depth},
          {"width", c.width},
          {"skip_layer", c.skip_layer ? json(*c.skip_layer) : json(nullptr)},
          {"omega0", c.omega0},
          {"lr", resolved_lr(f)},
          {"batch", f.batch},
          {"steps", f.steps},
          {"anneal_patience", f.anneal_patience},
          {"early_stop", f.early_stop},
          {"eval_every", f.eval_every},
          {"target_loss", f.target_loss},
          {"split", f.split},
          {"seed", f.seed}};
}

json run_json(const TrainRun& run) { return json::parse(run.to_json()); }

// ---------------------------------------------------------------------------------------------

struct Common {
  std::string config;
  std::size_t threads = 1;
  std::string report;
};

void add_common(CLI::App* app, Common& c, bool with_report) {
  app->set_help_flag("--help", "Print this help message and exit");  // -h would clash with simulate --h
  app->add_option("--config", c.config, "File of 'key = value' lines using the flag names; flags override it");
  app->add_option("--threads", c.threads, "Worker thread cap; 1 guarantees determinism")->capture_default_str();
  if (with_report) app->add_option("--report", c.report, "Write the JSON report here instead of stdout");
}

// embed --------------------------------------------------------------------------------------

struct EmbedFlags {
  Common common;
  std::string graph;
  std::size_t k = 100;
  std::string laplacian = "comb";
  double tol = 1e-8;
  std::size_t max_restarts = 300;
  std::string transform = "shift-invert";
  std::optional<double> truncate;
  std::uint64_t seed = 0;
  std::string out;
};

int run_embed(const EmbedFlags& f, std::ostream& out) {
  const Graph g = load_graph(f.graph);
  EigensolverOptions eo;
  eo.tol = f.tol;
  eo.max_restarts = f.max_restarts;
  eo.seed = f.seed;
  eo.transform = f.transform == "shift" ? SpectralTransform::shift : SpectralTransform::shift_invert;
  const LaplacianKind kind = parse_laplacian_kind(f.laplacian);
  const EigenBasis basis = graph_eigenpairs(g, f.k, kind, eo);
  SpectralEmbedding emb = embed(basis, g.hash());
  std::vector<std::size_t> dropped;
  if (f.truncate) {
    TruncatedEmbedding t = truncate_trivial(emb, *f.truncate);
    emb = std::move(t.embedding);
    dropped = std::move(t.dropped);
  }
  save_embedding(emb, f.out);
  json report = {{"command", "embed"},
                 {"graph", f.graph},
                 {"n", emb.n()},
                 {"k", emb.k()},
                 {"laplacian", std::string(to_string(kind))},
                 {"tol", f.tol},
                 {"transform", f.transform},
                 {"seed", f.seed},
                 {"max_residual", basis.residual_norms.size() ? basis.residual_norms.maxCoeff() : 0.0},
                 {"dropped", dropped},
                 {"eigenvalues", std::vector<double>(emb.eigenvalues.data(), emb.eigenvalues.data() + emb.eigenvalues.size())},
                 {"out", f.out}};
  if (f.truncate) report["truncate_trivial"] = *f.truncate;
  emit_report(report, f.common.report, out);
  return kExitOk;
}

// train --------------------------------------------------------------------------------------

struct TrainFlags {
  Common common;
  ModelFlags model;
  std::string emb;
  std::string signal;
  std::string cond = "none";
  std::string trajectory;
  std::size_t frame_stride = 1;
  double latent_lr = 1e-2;
  std::string out;
};

std::size_t latent_dim_of(const std::string& cond) {
  if (cond.rfind("latent:", 0) != 0) return 0;
  const std::size_t q = to_size(cond.substr(7), "--cond");
  if (q < 1) throw ContractError("--cond latent:q needs q >= 1");
  return q;
}

int run_train(const TrainFlags& f, std::ostream& out) {
  const MLPConfig mc = model_config(f.model);
  TrainConfig tc = train_config(f.model);
  tc.latent_lr = f.latent_lr;
  json report = {{"command", "train"}, {"flags", model_flags_json(f.model)}, {"cond", f.cond}, {"out", f.out}};
  Checkpoint ckpt;

  if (f.cond == "none") {
    if (f.signal.empty()) throw ContractError("train: --signal is required");
    const SpectralEmbedding emb = load_embedding(f.emb);
    const SignalField signal = load_signal(f.signal, emb.n());
    FitResult res = fit(emb, signal, mc, tc);
    ckpt.model = std::move(res.model);
    report["run"] = run_json(res.run);
  } else if (f.cond == "time") {
    if (f.trajectory.empty()) throw ContractError("train: --cond time needs --trajectory");
    if (f.frame_stride < 1) throw ContractError("--frame-stride must be at least 1");
    const SpectralEmbedding emb = load_embedding(f.emb);
    const LoadedTrajectory traj = load_trajectory(f.trajectory);
    std::vector<TimeFrame> train, held;
    for (std::size_t i = 0; i < traj.frames.size(); ++i) {
      traj.frames[i].check(emb.n());
      const auto step = static_cast<std::size_t>(traj.times[i]);
      (step % f.frame_stride == 0 ? train : held).push_back({traj.times[i], traj.frames[i]});
    }
    if (train.empty()) throw ContractError("no trajectory frame matches --frame-stride");
    ConditionalTimeResult res = fit_conditional_time(emb, train, mc, tc);
    ckpt.model = std::move(res.model);
    ckpt.metadata["time_min"] = res.time.t_min;
    ckpt.metadata["time_max"] = res.time.t_max;
    report["run"] = run_json(res.run);
    report["frame_stride"] = f.frame_stride;
    report["training_frames"] = train.size();
    // Frames left out of training are evaluated against the model and the per-node
    // linear interpolation baseline.
    json frames = json::array();
    double sum_model = 0.0, sum_base = 0.0;
    std::size_t counted = 0;
    for (const auto& h : held) {
      const auto r_model = r2_score(predict_at_time(ckpt.model, emb, h.t, res.time), h.field.values);
      const auto r_base = r2_score(interpolate_frames(train, h.t), h.field.values);
      frames.push_back({{"t", h.t}, {"r2", optional_json(r_model)}, {"baseline_r2", optional_json(r_base)}});
      if (r_model && r_base) {
        sum_model += *r_model;
        sum_base += *r_base;
        ++counted;
      }
    }
    report["heldout"] = {{"frames", frames},
                         {"count", held.size()},
                         {"r2_mean", counted ? json(sum_model / static_cast<double>(counted)) : json(nullptr)},
                         {"baseline_r2_mean", counted ? json(sum_base / static_cast<double>(counted)) : json(nullptr)}};
  } else if (const std::size_t q = latent_dim_of(f.cond); q > 0) {
    const auto emb_paths = split_list(f.emb);
    const auto sig_paths = split_list(f.signal);
    if (emb_paths.size() != sig_paths.size())
      throw ContractError("--cond latent needs as many --signal files as --emb files");
    std::vector<DomainSample> data;
    for (std::size_t i = 0; i < emb_paths.size(); ++i) {
      SpectralEmbedding emb = load_embedding(emb_paths[i]);
      SignalField s = load_signal(sig_paths[i], emb.n());
      data.push_back({std::move(emb), std::move(s)});
    }
    AutodecoderResult res = fit_autodecoder(data, q, mc, tc);
    ckpt.model = std::move(res.model);
    ckpt.latents = std::move(res.latents);
    report["run"] = run_json(res.run);
    json r2 = json::array();
    for (const auto& v : res.r2) r2.push_back(optional_json(v));
    report["sample_r2"] = r2;
  } else {
    throw ContractError("--cond must be none, time or latent:q, got '" + f.cond + "'");
  }
  save_checkpoint(ckpt, f.out);
  emit_report(report, f.common.report, out);
  return kExitOk;
}

// predict ------------------------------------------------------------------------------------

struct PredictFlags {
  Common common;
  std::string model;
  std::string emb;
  std::string align_to;
  bool shared_prefix = false;
  std::optional<double> time;
  std::optional<std::size_t> latent_row;
  std::string graph;
  std::string ply;
  std::string out;
};

int run_predict(const PredictFlags& f, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(f.model);
  const MLPConfig& mc = ckpt.model.config();
  SpectralEmbedding emb = load_embedding(f.emb);
  json report = {{"command", "predict"}, {"model", f.model}, {"emb", f.emb}, {"out", f.out}};
  if (!f.align_to.empty()) {
    const SpectralEmbedding ref = load_embedding(f.align_to);
    if (ref.k() < mc.input_dim) throw ContractError("reference embedding is narrower than the model input");
    AlignmentOptions opts;
    if (f.shared_prefix) {
      if (ref.n() > emb.n()) throw ContractError("--shared-prefix: reference has more nodes than the target");
      NodeCorrespondence anchors;
      for (std::size_t i = 0; i < ref.n(); ++i) anchors.reference.push_back(i);
      anchors.target = anchors.reference;
      opts.anchors = std::move(anchors);
    }
    AlignedEmbedding aligned = align_to_reference(ref.leading(mc.input_dim), basis_from_embedding(emb), opts);
    emb = std::move(aligned.embedding);
    json cols = json::array();
    for (const auto& c : aligned.report.columns)
      cols.push_back({{"column", c.column},
                      {"sign", c.sign},
                      {"ambiguous", c.ambiguous},
                      {"degenerate", c.degenerate},
                      {"anchored", c.anchored}});
    report["alignment"] = {{"columns", cols},
                           {"ambiguous", aligned.report.ambiguous_count()},
                           {"degenerate_blocks", aligned.report.degenerate_blocks.size()}};
  } else {
    if (emb.k() < mc.input_dim)
      throw ContractError("embedding has " + std::to_string(emb.k()) + " columns, model expects " +
                          std::to_string(mc.input_dim));
    emb = emb.leading(mc.input_dim);
  }

  Eigen::MatrixXd pred;
  const bool timed = ckpt.metadata.count("time_min") > 0;
  if (ckpt.latents) {
    if (!f.latent_row) throw ContractError("model is an autodecoder: --latent-row is required");
    if (*f.latent_row >= ckpt.latents->size())
      throw ContractError("--latent-row " + std::to_string(*f.latent_row) + " out of range (table has " +
                          std::to_string(ckpt.latents->size()) + " rows)");
    pred = predict_with_latent(ckpt.model, emb, ckpt.latents->z.row(static_cast<Eigen::Index>(*f.latent_row)).transpose());
    report["latent_row"] = *f.latent_row;
  } else if (timed) {
    if (!f.time) throw ContractError("model is time-conditioned: --time is required");
    const TimeNormalization tn{ckpt.metadata.at("time_min"), ckpt.metadata.at("time_max")};
    pred = predict_at_time(ckpt.model, emb, *f.time, tn);
    report["time"] = *f.time;
  } else {
    if (mc.cond_dim > 0) throw ContractError("checkpoint has conditioning but neither latents nor a time range");
    pred = predict(ckpt.model, emb.matrix);
  }
  const SignalField field(pred);
  save_signal(field, f.out);
  if (!f.ply.empty()) {
    if (f.graph.empty()) throw ContractError("--ply needs --graph for the geometry");
    export_ply(load_graph(f.graph), field, f.ply);
  }
  report["n"] = field.rows();
  report["channels"] = field.channels();
  emit_report(report, f.common.report, out);
  return kExitOk;
}

// simulate -----------------------------------------------------------------------------------

struct SimulateFlags {
  Common common;
  std::string graph;
  GrayScottParams params;
  std::string out_dir;
  std::string ply;
};

int run_simulate(const SimulateFlags& f, std::ostream& out) {
  const Graph g = load_graph(f.graph);
  const GrayScottTrajectory traj = gs_simulate(g, f.params);
  save_trajectory(traj, f.params, f.out_dir);
  if (!f.ply.empty()) export_ply(g, SignalField(traj.final_state.a, {"a"}), f.ply);
  const auto& p = f.params;
  json report = {{"command", "simulate"},
                 {"graph", f.graph},
                 {"n", g.num_nodes()},
                 {"Da", p.diffusion_a},
                 {"Db", p.diffusion_b},
                 {"F", p.feed},
                 {"K", p.kill},
                 {"h", p.step_size},
                 {"steps", p.steps},
                 {"sample_every", p.sample_every},
                 {"seed", p.seed},
                 {"frames", traj.frames.size()},
                 {"stable_step_limit", gs_max_stable_step(laplacian(g, LaplacianKind::combinatorial), p)},
                 {"final_a_min", traj.final_state.a.minCoeff()},
                 {"final_a_max", traj.final_state.a.maxCoeff()},
                 {"out_dir", f.out_dir}};
  emit_report(report, f.common.report, out);
  return kExitOk;
}

// sbm-sweep ----------------------------------------------------------------------------------

struct SweepFlags {
  Common common;
  ModelFlags model;
  std::size_t n = 1000;
  double train_p = 0.1;
  double train_r = 0.5;
  std::string grid_p = "0.1:0.5:0.1";
  std::string grid_r = "0.1:0.9:0.2";
  std::size_t k = 3;
  std::string laplacian = "sym";
  std::size_t seeds = 5;
  std::string out;
  std::string boundary_out;
};

int run_sweep(const SweepFlags& f, std::ostream& out) {
  SweepConfig sc;
  sc.train = {f.n, f.train_p, f.train_r, f.model.seed};
  sc.grid_p = parse_grid(f.grid_p);
  sc.grid_r = parse_grid(f.grid_r);
  sc.k = f.k;
  sc.kind = parse_laplacian_kind(f.laplacian);
  sc.seeds = f.seeds;
  sc.model = model_config(f.model);
  sc.training = train_config(f.model);
  sc.threads = f.common.threads;
  const SweepResult res = sbm_transfer_sweep(sc);
  write_sweep_csv(res, f.out);
  if (!f.boundary_out.empty()) write_boundary_csv(f.n, sc.grid_p, f.boundary_out);
  json cells = json::array();
  for (const auto& c : res.cells)
    cells.push_back({{"p", c.p}, {"r", c.r}, {"nmi", c.nmi}, {"nmi_mean", c.nmi_mean}, {"boundary_r", c.boundary}});
  json report = {{"command", "sbm-sweep"},
                 {"flags", model_flags_json(f.model)},
                 {"n", f.n},
                 {"train_p", f.train_p},
                 {"train_r", f.train_r},
                 {"k", f.k},
                 {"laplacian", std::string(to_string(sc.kind))},
                 {"seeds", f.seeds},
                 {"train_nmi", res.train_nmi},
                 {"cells", cells},
                 {"out", f.out}};
  emit_report(report, f.common.report, out);
  return kExitOk;
}

// subdivide ----------------------------------------------------------------------------------

struct SubdivideFlags {
  Common common;
  std::string mesh;
  std::string out;
};

int run_subdivide(const SubdivideFlags& f, std::ostream& out) {
  const Graph g = load_graph(f.mesh);
  if (!g.has_faces()) throw ContractError("subdivide: '" + f.mesh + "' has no faces");
  const Graph fine = loop_subdivide(g);
  save_mesh(fine, f.out);
  const json report = {{"command", "subdivide"},
                       {"vertices", g.num_nodes()},
                       {"edges", g.num_edges()},
                       {"faces", g.faces().size()},
                       {"fine_vertices", fine.num_nodes()},
                       {"fine_edges", fine.num_edges()},
                       {"fine_faces", fine.faces().size()},
                       {"out", f.out}};
  emit_report(report, f.common.report, out);
  return kExitOk;
}

// ablate-k -----------------------------------------------------------------------------------

struct AblateFlags {
  Common common;
  ModelFlags model;
  std::string graph;
  std::string signal;
  std::string k_list = "2,4,8,16,32,64,100";
  std::string laplacian = "comb";
  std::string out;
};

int run_ablate(const AblateFlags& f, std::ostream& out) {
  const Graph g = load_graph(f.graph);
  const SignalField signal = load_signal(f.signal, g.num_nodes());
  const auto ks = parse_k_list(f.k_list);
  const std::size_t kmax = *std::max_element(ks.begin(), ks.end());
  const SpectralEmbedding emb = embed(graph_eigenpairs(g, kmax, parse_laplacian_kind(f.laplacian)), g.hash());
  const auto rows = k_ablation(emb, signal, ks, model_config(f.model), train_config(f.model), f.common.threads);
  write_ablation_csv(rows, f.out);
  json table = json::array();
  for (const auto& r : rows) table.push_back({{"k", r.k}, {"r2", optional_json(r.r2)}, {"mse", r.mse}});
  const json report = {{"command", "ablate-k"}, {"flags", model_flags_json(f.model)}, {"rows", table}, {"out", f.out}};
  emit_report(report, f.common.report, out);
  return kExitOk;
}

// poisson-train ------------------------------------------------------------------------------

struct PoissonFlags {
  Common common;
  ModelFlags model;
  std::string emb;
  std::string signal;
  std::string graph;
  std::string laplacian = "comb";
  std::string out;
};

int run_poisson(const PoissonFlags& f, std::ostream& out) {
  const SpectralEmbedding emb = load_embedding(f.emb);
  const SignalField signal = load_signal(f.signal, emb.n());
  const Graph g = load_graph(f.graph);
  if (g.num_nodes() != emb.n()) throw ContractError("--graph and --emb have different node counts");
  const CsrMatrix L = laplacian(g, parse_laplacian_kind(f.laplacian));
  FitResult res = fit_laplacian_supervised(emb, signal, L, model_config(f.model), train_config(f.model));
  Checkpoint ckpt;
  ckpt.model = std::move(res.model);
  save_checkpoint(ckpt, f.out);
  const json report = {{"command", "poisson-train"},
                       {"flags", model_flags_json(f.model)},
                       {"laplacian", f.laplacian},
                       {"run", run_json(res.run)},
                       {"out", f.out}};
  emit_report(report, f.common.report, out);
  return kExitOk;
}

// eval ---------------------------------------------------------------------------------------

struct EvalFlags {
  Common common;
  std::string pred;
  std::string truth;
  std::string metric = "r2";
  std::optional<double> trim_percentile;
};

std::vector<int> labels(const SignalField& s) {
  std::vector<int> out(s.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(std::lround(s.values(static_cast<Eigen::Index>(i), 0)));
  return out;
}

int run_eval(const EvalFlags& f, std::ostream& out) {
  const SignalField truth = load_signal(f.truth);
  const SignalField pred = load_signal(f.pred, truth.rows());
  if (pred.channels() != truth.channels()) throw ContractError("prediction and truth have different channel counts");
  double value = 0.0;
  if (f.metric == "r2") {
    const auto r2 = f.trim_percentile ? trimmed_r2(pred.values, truth.values, *f.trim_percentile).trimmed
                                      : r2_score(pred.values, truth.values);
    if (!r2) throw NumericalError("R2 is undefined: the truth has zero variance");
    value = *r2;
  } else if (f.metric == "mse") {
    value = mse(pred.values, truth.values);
  } else {
    value = nmi(labels(pred), labels(truth));
  }
  out << format_real(value) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------------------------

void print_error(std::ostream& err, const std::string& type, int code, const std::string& message) {
  err << "error: " << json{{"type", type}, {"exit", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
  const auto range = split_list(text, ':');
  if (range.size() == 3) {
    const double a = to_double(range[0], "grid"), b = to_double(range[1], "grid"), s = to_double(range[2], "grid");
    if (!(s > 0.0) || b < a) throw ContractError("grid '" + text + "' needs a <= b and a positive step");
    std::vector<double> out;
    const auto count = static_cast<std::size_t>(std::floor((b - a) / s + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) out.push_back(a + static_cast<double>(i) * s);
    return out;
  }
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_double(item, "grid"));
  if (out.empty()) throw ContractError("empty grid '" + text + "'");
  return out;
}

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path);
  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.rfind("--", 0) != 0) continue;
    given.insert(a.substr(0, a.find('=')));
  }
  std::vector<std::string> out = args;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("config line is not 'key = value'", number);
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("config line has an empty key", number);
    if (key.rfind("--", 0) != 0) key = "--" + key;
    if (key == "--config") continue;
    if (!given.count(key)) out.push_back(key + "=" + value);
  }
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral-embedding implicit neural representations on graphs"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  const auto existing = CLI::ExistingFile;
  const auto existing_dir = CLI::ExistingDirectory;

  EmbedFlags embed_f;
  auto* embed_cmd = app.add_subcommand("embed", "Spectral embedding of a graph, saved as GEMB");
  add_common(embed_cmd, embed_f.common, true);
  embed_cmd->add_option("--graph", embed_f.graph, "Mesh (.obj), edge list, or generator (path:N, icosphere:S, sbm:N:P:R:SEED)")
      ->required();
  embed_cmd->add_option("--k", embed_f.k, "Number of eigenvectors")->capture_default_str();
  embed_cmd->add_option("--laplacian", embed_f.laplacian, "comb, sym or rw")
      ->check(CLI::IsMember({"comb", "combinatorial", "sym", "symmetric", "rw", "random_walk"}))
      ->capture_default_str();
  embed_cmd->add_option("--tol", embed_f.tol, "Eigenpair residual tolerance")->capture_default_str();
  embed_cmd->add_option("--max-restarts", embed_f.max_restarts, "Lanczos restart limit")->capture_default_str();
  embed_cmd->add_option("--transform", embed_f.transform, "shift-invert or shift")
      ->check(CLI::IsMember({"shift-invert", "shift"}))
      ->capture_default_str();
  embed_cmd->add_option("--truncate-trivial", embed_f.truncate, "Drop leading almost-trivial columns at this flatness threshold");
  embed_cmd->add_option("--seed", embed_f.seed, "Lanczos start vector seed")->capture_default_str();
  embed_cmd->add_option("--out", embed_f.out, "Output GEMB file")->required();

  TrainFlags train_f;
  auto* train_cmd = app.add_subcommand("train", "Fit a network to a signal, a trajectory, or several domains");
  add_common(train_cmd, train_f.common, true);
  add_model_flags(train_cmd, train_f.model);
  train_cmd->add_option("--emb", train_f.emb, "GEMB embedding (comma-separated list for --cond latent:q)")->required();
  train_cmd->add_option("--signal", train_f.signal, "Signal file (comma-separated list for --cond latent:q)");
  train_cmd->add_option("--cond", train_f.cond, "none, time or latent:q")->capture_default_str();
  train_cmd->add_option("--trajectory", train_f.trajectory, "Trajectory directory for --cond time")->check(existing_dir);
  train_cmd->add_option("--frame-stride", train_f.frame_stride, "Train on frames whose step is a multiple of this")
      ->capture_default_str();
  train_cmd->add_option("--latent-lr", train_f.latent_lr, "Latent learning rate (0: same as --lr)")->capture_default_str();
  train_cmd->add_option("--out", train_f.out, "Output checkpoint")->required();

  PredictFlags predict_f;
  auto* predict_cmd = app.add_subcommand("predict", "Evaluate a checkpoint on an embedding");
  add_common(predict_cmd, predict_f.common, true);
  predict_cmd->add_option("--model", predict_f.model, "Checkpoint")->required()->check(existing);
  predict_cmd->add_option("--emb", predict_f.emb, "GEMB embedding of the target graph")->required()->check(existing);
  predict_cmd->add_option("--align-to", predict_f.align_to, "Reference GEMB; align signs to it first")->check(existing);
  predict_cmd->add_flag("--shared-prefix", predict_f.shared_prefix,
                        "Reference nodes are the first target nodes (subdivided meshes); enables anchored alignment");
  predict_cmd->add_option("--time", predict_f.time, "Time for a time-conditioned model");
  predict_cmd->add_option("--latent-row", predict_f.latent_row, "Latent row for an autodecoder");
  predict_cmd->add_option("--graph", predict_f.graph, "Graph with positions, for --ply");
  predict_cmd->add_option("--ply", predict_f.ply, "Also write an ASCII PLY with the prediction");
  predict_cmd->add_option("--out", predict_f.out, "Output signal (.gsig binary, otherwise CSV)")->required();

  SimulateFlags sim_f;
  auto* sim_cmd = app.add_subcommand("simulate", "Gray-Scott reaction-diffusion on a graph");
  add_common(sim_cmd, sim_f.common, true);
  sim_cmd->add_option("--graph", sim_f.graph, "Graph source")->required();
  sim_cmd->add_option("--Da", sim_f.params.diffusion_a, "Diffusion of a")->capture_default_str();
  sim_cmd->add_option("--Db", sim_f.params.diffusion_b, "Diffusion of b")->capture_default_str();
  sim_cmd->add_option("--F", sim_f.params.feed, "Feed rate")->capture_default_str();
  sim_cmd->add_option("--K", sim_f.params.kill, "Kill rate")->capture_default_str();
  sim_cmd->add_option("--h", sim_f.params.step_size, "Euler step size")->capture_default_str();
  sim_cmd->add_option("--steps", sim_f.params.steps, "Number of steps")->capture_default_str();
  sim_cmd->add_option("--sample-every", sim_f.params.sample_every, "Frame interval")->capture_default_str();
  sim_cmd->add_option("--seed", sim_f.params.seed, "Initial state seed")->capture_default_str();
  sim_cmd->add_flag("--record-b", sim_f.params.record_b, "Also store frames of b");
  sim_cmd->add_option("--ply", sim_f.ply, "Also write the final a as an ASCII PLY");
  sim_cmd->add_option("--out-dir", sim_f.out_dir, "Trajectory directory")->required();

  SweepFlags sweep_f;
  sweep_f.model.arch = "relu";
  sweep_f.model.layers = 8;
  sweep_f.model.steps = 1000;
  auto* sweep_cmd = app.add_subcommand("sbm-sweep", "Train on one SBM and measure transfer over a (p, r) grid");
  add_common(sweep_cmd, sweep_f.common, true);
  add_model_flags(sweep_cmd, sweep_f.model);
  sweep_cmd->add_option("--n", sweep_f.n, "Nodes per graph")->capture_default_str();
  sweep_cmd->add_option("--train-p", sweep_f.train_p, "Training inter-community probability")->capture_default_str();
  sweep_cmd->add_option("--train-r", sweep_f.train_r, "Training intra-community probability")->capture_default_str();
  sweep_cmd->add_option("--grid-p", sweep_f.grid_p, "p values, a:b:step or a list")->capture_default_str();
  sweep_cmd->add_option("--grid-r", sweep_f.grid_r, "r values, a:b:step or a list")->capture_default_str();
  sweep_cmd->add_option("--k", sweep_f.k, "Embedding size")->capture_default_str();
  sweep_cmd->add_option("--laplacian", sweep_f.laplacian, "comb, sym or rw")
      ->check(CLI::IsMember({"comb", "combinatorial", "sym", "symmetric", "rw", "random_walk"}))
      ->capture_default_str();
  sweep_cmd->add_option("--seeds", sweep_f.seeds, "Fresh graphs per cell")->capture_default_str();
  sweep_cmd->add_option("--boundary-out", sweep_f.boundary_out, "Also write the recovery boundary CSV");
  sweep_cmd->add_option("--out", sweep_f.out, "Output CSV")->required();

  SubdivideFlags sub_f;
  auto* sub_cmd = app.add_subcommand("subdivide", "One step of Loop subdivision");
  add_common(sub_cmd, sub_f.common, true);
  sub_cmd->add_option("--mesh", sub_f.mesh, "Triangle mesh (.obj or icosphere:S)")->required();
  sub_cmd->add_option("--out", sub_f.out, "Output OBJ")->required();

  AblateFlags abl_f;
  abl_f.model.split = "80/10/10";
  auto* abl_cmd = app.add_subcommand("ablate-k", "Fit quality as a function of the embedding size");
  add_common(abl_cmd, abl_f.common, true);
  add_model_flags(abl_cmd, abl_f.model);
  abl_cmd->add_option("--graph", abl_f.graph, "Graph source")->required();
  abl_cmd->add_option("--signal", abl_f.signal, "Signal file")->required()->check(existing);
  abl_cmd->add_option("--k-list", abl_f.k_list, "Comma-separated embedding sizes")->capture_default_str();
  abl_cmd->add_option("--laplacian", abl_f.laplacian, "comb, sym or rw")
      ->check(CLI::IsMember({"comb", "combinatorial", "sym", "symmetric", "rw", "random_walk"}))
      ->capture_default_str();
  abl_cmd->add_option("--out", abl_f.out, "Output CSV")->required();

  PoissonFlags poi_f;
  auto* poi_cmd = app.add_subcommand("poisson-train", "Train on the Laplacian of the signal instead of its values");
  add_common(poi_cmd, poi_f.common, true);
  add_model_flags(poi_cmd, poi_f.model);
  poi_cmd->add_option("--emb", poi_f.emb, "GEMB embedding")->required()->check(existing);
  poi_cmd->add_option("--signal", poi_f.signal, "Signal file")->required()->check(existing);
  poi_cmd->add_option("--graph", poi_f.graph, "Graph source for the Laplacian")->required();
  poi_cmd->add_option("--laplacian", poi_f.laplacian, "comb, sym or rw")
      ->check(CLI::IsMember({"comb", "combinatorial", "sym", "symmetric", "rw", "random_walk"}))
      ->capture_default_str();
  poi_cmd->add_option("--out", poi_f.out, "Output checkpoint")->required();

  EvalFlags eval_f;
  auto* eval_cmd = app.add_subcommand("eval", "Compare a prediction with the truth");
  add_common(eval_cmd, eval_f.common, false);
  eval_cmd->add_option("--pred", eval_f.pred, "Predicted signal")->required()->check(existing);
  eval_cmd->add_option("--truth", eval_f.truth, "True signal")->required()->check(existing);
  eval_cmd->add_option("--metric", eval_f.metric, "r2, mse or nmi")
      ->check(CLI::IsMember({"r2", "mse", "nmi"}))
      ->capture_default_str();
  eval_cmd->add_option("--trim-percentile", eval_f.trim_percentile,
                       "For r2: drop nodes whose squared error exceeds this percentile");

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::reverse(args.begin(), args.end());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp&) {
      out << app.help();  // the selected subcommand's help when one was given
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    } catch (const CLI::ParseError& e) {
      print_error(err, "usage", kExitUsage, e.what());
      return kExitUsage;
    }
    if (embed_cmd->parsed()) return run_embed(embed_f, out);
    if (train_cmd->parsed()) return run_train(train_f, out);
    if (predict_cmd->parsed()) return run_predict(predict_f, out);
    if (sim_cmd->parsed()) return run_simulate(sim_f, out);
    if (sweep_cmd->parsed()) return run_sweep(sweep_f, out);
    if (sub_cmd->parsed()) return run_subdivide(sub_f, out);
    if (abl_cmd->parsed()) return run_ablate(abl_f, out);
    if (poi_cmd->parsed()) return run_poisson(poi_f, out);
    if (eval_cmd->parsed()) return run_eval(eval_f, out);
    print_error(err, "usage", kExitUsage, "no subcommand");
    return kExitUsage;
  } catch (const DivergenceError& e) {
    print_error(err, "divergence", kExitNumerical, e.what());
    return kExitNumerical;
  } catch (const NumericalError& e) {
    print_error(err, "numerical", kExitNumerical, e.what());
    return kExitNumerical;
  } catch (const ParseError& e) {
    print_error(err, "parse", kExitUsage, e.what());
    return kExitUsage;
  } catch (const ContractError& e) {
    print_error(err, "contract", kExitUsage, e.what());
    return kExitUsage;
  } catch (const Error& e) {
    print_error(err, "io", kExitUsage, e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error(err, "internal", kExitUsage, e.what());
    return kExitUsage;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace ginr::cli
