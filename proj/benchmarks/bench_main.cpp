#include <benchmark/benchmark.h>

#include <Eigen/Core>

#include "ginr/dynamics.hpp"
#include "ginr/graph.hpp"
#include "ginr/mlp.hpp"
#include "ginr/spectral.hpp"

namespace {

using namespace ginr;

void BM_SpMV(benchmark::State& state) {
  const Graph g = generate_icosphere(static_cast<std::size_t>(state.range(0)));
  const CsrMatrix l = laplacian(g, LaplacianKind::combinatorial);
  const Eigen::VectorXd x = Eigen::VectorXd::Random(static_cast<Eigen::Index>(g.num_nodes()));
  Eigen::VectorXd y(x.size());
  for (auto _ : state) {
    l.multiply({x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())});
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(l.nonzeros()));
}
BENCHMARK(BM_SpMV)->Arg(3)->Arg(5)->Arg(6);

void BM_Eigensolver(benchmark::State& state) {
  const Graph g = generate_icosphere(static_cast<std::size_t>(state.range(0)));
  const CsrMatrix l = laplacian(g, LaplacianKind::combinatorial);
  EigensolverOptions opt;
  opt.transform = state.range(2) ? SpectralTransform::shift_invert : SpectralTransform::shift;
  for (auto _ : state) benchmark::DoNotOptimize(smallest_eigenpairs(l, static_cast<std::size_t>(state.range(1)), opt));
  state.SetLabel(state.range(2) ? "shift-invert" : "shift");
}
BENCHMARK(BM_Eigensolver)->Args({3, 100, 1})->Args({3, 100, 0})->Args({5, 100, 1})->Unit(benchmark::kMillisecond);

void BM_MlpStep(benchmark::State& state) {
  MLPConfig cfg;
  cfg.input_dim = 100;
  cfg.output_dim = 1;
  cfg.width = static_cast<std::size_t>(state.range(0));
  cfg.depth = 6;
  cfg.skip_layer = 3;
  MLPModel model = MLPModel::init(cfg);
  const Eigen::Index batch = state.range(1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(batch, 100);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Random(batch, 1);
  ForwardCache cache;
  AdamState adam;
  for (auto _ : state) {
    const Eigen::MatrixXd pred = model.forward(x, {}, &cache);
    Eigen::MatrixXd grad = 2.0 * (pred - y) / static_cast<double>(batch);
    Gradients g = model.backward(cache, grad);
    adam_step(adam, model, g);
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_MlpStep)->Args({64, 642})->Args({256, 5000})->Unit(benchmark::kMicrosecond);

void BM_GrayScottStep(benchmark::State& state) {
  const Graph g = generate_icosphere(static_cast<std::size_t>(state.range(0)));
  const CsrMatrix l = laplacian(g, LaplacianKind::combinatorial);
  GrayScottParams p;
  p.diffusion_a *= 0.01;
  p.diffusion_b *= 0.01;
  GrayScottState s = gs_init(g.num_nodes(), 1);
  for (auto _ : state) {
    s = gs_step(s, l, p);
    benchmark::DoNotOptimize(s.a.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.num_nodes()));
}
BENCHMARK(BM_GrayScottStep)->Arg(3)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
