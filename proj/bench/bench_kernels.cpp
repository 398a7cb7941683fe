// Serial reference vs OpenMP kernel timings. Thread count follows OMP_NUM_THREADS.

#include "creditvae/cluster.hpp"
#include "creditvae/data.hpp"
#include "creditvae/embed.hpp"
#include "creditvae/transform.hpp"
#include "creditvae/vae.hpp"

#include <benchmark/benchmark.h>

#include <numeric>
#include <random>

using namespace creditvae;

namespace {

std::vector<Segment> portfolio(std::size_t d) {
  std::vector<Segment> segs(2);
  for (std::size_t s = 0; s < 2; ++s) {
    segs[s].weight = 0.5;
    segs[s].default_probability = s == 0 ? 0.03 : 0.25;
    for (std::size_t j = 0; j < d; ++j) {
      FeatureGenerator f;
      f.name = "f" + std::to_string(j + 1);
      f.mean = (s == 0 ? 1.0 : -1.0) + 0.3 * static_cast<double>(j);
      f.variance = 1.0;
      f.missing_rate = j == 0 ? 0.02 : 0.0;
      segs[s].features.push_back(f);
    }
  }
  return segs;
}

const Dataset& dataset() {
  static const Dataset ds = synth_generate(portfolio(10), 20000, 1);
  return ds;
}

const TransformSpec& woe_spec() {
  static const TransformSpec spec = fit_transform(dataset(), {TransformKind::woe_coarse});
  return spec;
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

template <bool Parallel>
void BM_apply_unscaled(benchmark::State& state) {
  const Dataset& ds = dataset();
  const TransformSpec& spec = woe_spec();
  for (auto _ : state) {
    Matrix x = Parallel ? apply_unscaled(spec, ds) : apply_unscaled_serial(spec, ds);
    benchmark::DoNotOptimize(x.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(dataset().size()));
}

template <bool Parallel>
void BM_batch_gradient(benchmark::State& state) {
  const auto a = architecture_preset("arch4", 20);
  const VaeParams p = init_params(a, 3);
  const Matrix data = uniform_matrix(1000, 20, 4);
  std::vector<std::size_t> rows(static_cast<std::size_t>(state.range(0)));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  const Matrix eps = uniform_matrix(static_cast<Eigen::Index>(rows.size()), 2, 5);
  for (auto _ : state) {
    auto g = Parallel ? batch_gradient(p, data, rows, eps) : batch_gradient_serial(p, data, rows, eps);
    benchmark::DoNotOptimize(g.recon_sum);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_embed_mean(benchmark::State& state) {
  const VaeParams p = init_params(architecture_preset("arch4", 20), 6);
  const Matrix data = uniform_matrix(state.range(0), 20, 7);
  for (auto _ : state) {
    auto e = Parallel ? embed_mean(p, data) : embed_mean_serial(p, data);
    benchmark::DoNotOptimize(e.points.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_ward_two(benchmark::State& state) {
  const Matrix pts = uniform_matrix(state.range(0), 2, 8);
  for (auto _ : state) {
    auto side = Parallel ? ward_agglomerative_two(pts) : ward_agglomerative_two_serial(pts);
    benchmark::DoNotOptimize(side.data());
  }
}

}  // namespace

BENCHMARK(BM_apply_unscaled<false>)->Name("apply_unscaled/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_apply_unscaled<true>)->Name("apply_unscaled/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_gradient<false>)->Name("batch_gradient/serial")->Arg(100)->Arg(1000);
BENCHMARK(BM_batch_gradient<true>)->Name("batch_gradient/openmp")->Arg(100)->Arg(1000);
BENCHMARK(BM_embed_mean<false>)->Name("embed_mean/serial")->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_embed_mean<true>)->Name("embed_mean/openmp")->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ward_two<false>)->Name("ward_two/serial")->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ward_two<true>)->Name("ward_two/openmp")->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
