#include "ginr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "ginr/error.hpp"
#include "ginr/rng.hpp"
#include "text_util.hpp"

namespace ginr {

namespace {

// Runs fn(i) for i in [0, count) on up to `threads` workers. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string num(double v) { return text::format_double(v); }

std::vector<int> labels_of(const SignalField& f) {
  std::vector<int> out(f.rows());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(std::lround(f.values(static_cast<Eigen::Index>(i), 0)));
  return out;
}

}  // namespace

double sbm_recovery_boundary(std::size_t n, double p) {
  if (n < 2) throw ContractError("sbm_recovery_boundary: n must be at least 2");
  if (!(p >= 0.0 && p <= 1.0)) throw ContractError("sbm_recovery_boundary: p must lie in [0, 1]");
  const double nn = static_cast<double>(n);
  const double ln = std::log(nn);
  const double t = std::sqrt(2.0) + std::sqrt(nn * p / ln);
  return ln / nn * t * t;
}

std::vector<int> threshold_labels(const Eigen::MatrixXd& pred, double threshold) {
  std::vector<int> out(static_cast<std::size_t>(pred.rows()));
  for (Eigen::Index i = 0; i < pred.rows(); ++i) out[static_cast<std::size_t>(i)] = pred(i, 0) >= threshold ? 1 : 0;
  return out;
}

TransferOutcome sbm_transfer(const MLPModel& model, const SpectralEmbedding& reference, const SBMParams& params,
                             const EigensolverOptions& eigen, LaplacianKind kind) {
  const auto [g, labels] = generate_sbm(params);
  const EigenBasis basis = graph_eigenpairs(g, reference.k(), kind, eigen);
  AlignedEmbedding aligned = align_to_reference(reference, basis);
  const Eigen::MatrixXd pred = predict(model, aligned.embedding.matrix);
  const auto decoded = threshold_labels(pred);
  const auto truth = labels_of(labels);
  return {nmi(decoded, truth), std::move(aligned.report)};
}

SweepResult sbm_transfer_sweep(const SweepConfig& config) {
  SweepResult result;
  const auto [g, labels] = generate_sbm(config.train);
  const EigenBasis basis = graph_eigenpairs(g, config.k, config.kind, config.eigen);
  result.reference = embed(basis, g.hash());
  result.fit = fit(result.reference, labels, config.model, config.training);
  result.train_nmi = nmi(threshold_labels(predict(result.fit.model, result.reference.matrix)), labels_of(labels));

  const std::size_t np = config.grid_p.size(), nr = config.grid_r.size();
  result.cells.resize(np * nr);
  const std::size_t jobs = np * nr * config.seeds;
  std::vector<TransferOutcome> outcomes(jobs);
  parallel_for(jobs, config.threads, [&](std::size_t job) {
    const std::size_t cell = job / config.seeds, s = job % config.seeds;
    SBMParams params{config.train.n, config.grid_p[cell / nr], config.grid_r[cell % nr],
                     derive_seed(config.train.seed, (cell + 1) * 1000003ULL + s)};
    outcomes[job] = sbm_transfer(result.fit.model, result.reference, params, config.eigen, config.kind);
  });
  for (std::size_t cell = 0; cell < np * nr; ++cell) {
    SweepCell& c = result.cells[cell];
    c.p = config.grid_p[cell / nr];
    c.r = config.grid_r[cell % nr];
    c.boundary = sbm_recovery_boundary(config.train.n, c.p);
    for (std::size_t s = 0; s < config.seeds; ++s) {
      const auto& o = outcomes[cell * config.seeds + s];
      c.nmi.push_back(o.nmi);
      c.degenerate_blocks += o.alignment.degenerate_blocks.size();
      c.ambiguous_columns += o.alignment.ambiguous_count();
    }
    if (!c.nmi.empty()) {
      c.nmi_mean = std::accumulate(c.nmi.begin(), c.nmi.end(), 0.0) / static_cast<double>(c.nmi.size());
      double var = 0.0;
      for (double v : c.nmi) var += (v - c.nmi_mean) * (v - c.nmi_mean);
      c.nmi_std = std::sqrt(var / static_cast<double>(c.nmi.size()));
    }
  }
  return result;
}

void write_sweep_csv(const SweepResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "p,r,nmi_mean,nmi_std,boundary_r,recoverable,degenerate_blocks,ambiguous_columns\n";
  for (const auto& c : result.cells) {
    out << num(c.p) << ',' << num(c.r) << ',' << num(c.nmi_mean) << ',' << num(c.nmi_std) << ',' << num(c.boundary)
        << ',' << (c.r > c.boundary ? 1 : 0) << ',' << c.degenerate_blocks << ',' << c.ambiguous_columns << '\n';
  }
}

void write_boundary_csv(std::size_t n, std::span<const double> grid_p, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "p,r_boundary\n";
  for (double p : grid_p) out << num(p) << ',' << num(sbm_recovery_boundary(n, p)) << '\n';
}

SuperResolution super_resolve(const MLPModel& model, const SpectralEmbedding& ref_emb, const Graph& fine,
                              std::size_t k, const SuperResolveOptions& options) {
  if (k < 1 || k > ref_emb.k()) throw ContractError("super_resolve: k must lie in [1, reference width]");
  if (model.config().input_dim != k) throw ContractError("super_resolve: model input width differs from k");
  const std::size_t n = fine.num_nodes();
  if (options.shared_prefix && ref_emb.n() > n) throw ContractError("super_resolve: fine graph is smaller than the reference");
  const std::size_t solve_k = std::min(k + options.extra_pairs, n - 1);
  const EigenBasis basis = graph_eigenpairs(fine, solve_k, options.kind, options.eigen);

  AlignmentOptions align;
  if (options.shared_prefix) {
    NodeCorrespondence anchors;
    anchors.reference.resize(ref_emb.n());
    std::iota(anchors.reference.begin(), anchors.reference.end(), std::size_t{0});
    anchors.target = anchors.reference;
    align.anchors = std::move(anchors);
  }
  AlignedEmbedding aligned = align_to_reference(ref_emb.leading(k), basis, align);

  SuperResolution out;
  out.prediction = SignalField(predict(model, aligned.embedding.matrix));
  out.alignment = std::move(aligned.report);
  if (options.reference_signal && options.shared_prefix) {
    const SignalField& truth = *options.reference_signal;
    truth.check(ref_emb.n());
    const Eigen::MatrixXd shared = out.prediction.values.topRows(truth.values.rows());
    out.squared_errors = squared_errors(shared, truth.values);
    out.metrics = trimmed_r2(shared, truth.values, options.trim_percentile);
  }
  return out;
}

std::vector<AblationRow> k_ablation(const SpectralEmbedding& emb, const SignalField& signal,
                                    std::span<const std::size_t> k_list, const MLPConfig& model_config,
                                    const TrainConfig& train_config, std::size_t threads) {
  for (std::size_t k : k_list)
    if (k < 1 || k > emb.k()) throw ContractError("k_ablation: k = " + std::to_string(k) + " outside [1, embedding width]");
  std::vector<AblationRow> rows(k_list.size());
  parallel_for(k_list.size(), threads, [&](std::size_t i) {
    const FitResult res = fit(emb.leading(k_list[i]), signal, model_config, train_config);
    const auto it = res.run.metrics.find("test");
    const SplitMetrics& m = it != res.run.metrics.end() ? it->second : res.run.metrics.at("train");
    rows[i] = {k_list[i], m.r2, m.mse};
  });
  return rows;
}

std::vector<AblationRow> k_ablation(const Graph& g, const SignalField& signal, std::span<const std::size_t> k_list,
                                    const MLPConfig& model_config, const TrainConfig& train_config,
                                    std::size_t threads, const EigensolverOptions& eigen) {
  if (k_list.empty()) return {};
  const std::size_t kmax = *std::max_element(k_list.begin(), k_list.end());
  const SpectralEmbedding emb = embed(graph_eigenpairs(g, kmax, LaplacianKind::combinatorial, eigen), g.hash());
  return k_ablation(emb, signal, k_list, model_config, train_config, threads);
}

void write_ablation_csv(std::span<const AblationRow> rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "k,r2,mse\n";
  for (const auto& r : rows) out << r.k << ',' << (r.r2 ? num(*r.r2) : "nan") << ',' << num(r.mse) << '\n';
}

}  // namespace ginr
