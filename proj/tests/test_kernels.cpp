// The OpenMP kernels must return exactly what their serial references return,
// whatever the thread count.

#include <doctest.h>

#include "creditvae/cluster.hpp"
#include "creditvae/embed.hpp"
#include "creditvae/transform.hpp"
#include "creditvae/vae.hpp"
#include "test_support.hpp"

#include <omp.h>

#include <numeric>

using namespace creditvae;
namespace ts = testing_support;

namespace {

struct ThreadCount {
  explicit ThreadCount(int n) : saved(omp_get_max_threads()) { omp_set_num_threads(n); }
  ~ThreadCount() { omp_set_num_threads(saved); }
  int saved;
};

}  // namespace

TEST_CASE("apply_unscaled: parallel equals serial") {
  auto ds = synth_generate(ts::risk_segments({0.05, 0.2, 0.4}, 6), 3000, 5);
  for (auto kind : {TransformKind::woe_coarse, TransformKind::pca_full, TransformKind::raw}) {
    auto spec = fit_transform(ds, {kind});
    const Matrix serial = apply_unscaled_serial(spec, ds);
    for (int threads : {1, 2, 4, 7}) {
      ThreadCount tc(threads);
      CHECK(apply_unscaled(spec, ds) == serial);
    }
  }
}

TEST_CASE("batch_gradient: parallel equals serial bit for bit") {
  auto a = architecture_preset("arch18", 8);
  auto p = ts::random_params(a, 3);
  std::mt19937_64 rng(4);
  Matrix data(250, 8);
  for (Eigen::Index i = 0; i < 250; ++i) data.row(i) = ts::random_vector(8, rng).transpose();
  std::vector<std::size_t> rows(100);
  for (std::size_t k = 0; k < 100; ++k) rows[k] = (k * 37) % 250;
  Matrix eps(100, 2);
  for (Eigen::Index i = 0; i < 100; ++i) eps.row(i) = ts::normal_vector(2, rng).transpose();

  const auto serial = batch_gradient_serial(p, data, rows, eps);
  for (int threads : {1, 3, 4, 8}) {
    ThreadCount tc(threads);
    const auto par = batch_gradient(p, data, rows, eps);
    CHECK(par.grad == serial.grad);
    CHECK(par.recon_sum == serial.recon_sum);
    CHECK(par.kl_sum == serial.kl_sum);
  }

  // The batch gradient is the mean of per-sample gradients.
  auto mean = VaeParams::zeros(a);
  for (std::size_t k = 0; k < rows.size(); ++k)
    mean += backward(p, data.row(static_cast<Eigen::Index>(rows[k])).transpose(),
                     eps.row(static_cast<Eigen::Index>(k)).transpose())
                .grad;
  mean *= 1.0 / 100.0;
  CHECK(mean == serial.grad);
}

TEST_CASE("training history does not depend on the thread count") {
  std::mt19937_64 rng(8);
  Matrix data(300, 5);
  for (Eigen::Index i = 0; i < 300; ++i) data.row(i) = ts::random_vector(5, rng).transpose();
  TrainConfig cfg;
  cfg.architecture = architecture_preset("arch4", 5);
  cfg.architecture.epochs = 5;
  cfg.seed = 2;
  TrainResult one, four;
  {
    ThreadCount tc(1);
    one = train(data, cfg);
  }
  {
    ThreadCount tc(4);
    four = train(data, cfg);
  }
  CHECK(one.history == four.history);
  CHECK(one.params == four.params);
}

TEST_CASE("embed_mean and embed_mc: parallel equals serial") {
  auto p = ts::random_params(architecture_preset("arch4", 6), 9);
  std::mt19937_64 rng(10);
  Matrix data(777, 6);
  for (Eigen::Index i = 0; i < data.rows(); ++i) data.row(i) = ts::random_vector(6, rng).transpose();
  const auto serial = embed_mean_serial(p, data);
  LatentEmbedding mc1;
  {
    ThreadCount tc(1);
    mc1 = embed_mc(p, data, 20, std::uint64_t{3});
  }
  for (int threads : {2, 4, 6}) {
    ThreadCount tc(threads);
    const auto par = embed_mean(p, data);
    CHECK(par.points == serial.points);
    CHECK(par.log_vars == serial.log_vars);
    CHECK(embed_mc(p, data, 20, std::uint64_t{3}).points == mc1.points);
  }
}

TEST_CASE("ward_agglomerative_two: parallel equals serial") {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 5; ++t) {
    auto blobs = ts::make_blobs({{0, 0}, {1, 1}, {2, 0}}, {150, 120, 90}, 0.6, rng());
    const auto serial = ward_agglomerative_two_serial(blobs.points);
    for (int threads : {2, 4}) {
      ThreadCount tc(threads);
      CHECK(ward_agglomerative_two(blobs.points) == serial);
    }
  }
}

TEST_CASE("label_latent does not depend on the thread count") {
  auto blobs = ts::make_blobs({{0, 0}, {3, 0}, {0, 3}}, {1200, 900, 700}, 0.4, 77);
  LabelingConfig cfg;
  cfg.subsample_cap = 500;
  cfg.seed = 4;
  ClusterAssignment one;
  {
    ThreadCount tc(1);
    one = label_points(blobs.points, cfg);
  }
  ThreadCount tc(4);
  CHECK(label_points(blobs.points, cfg).labels == one.labels);
}
