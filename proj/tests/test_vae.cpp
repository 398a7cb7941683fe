#include <doctest.h>

#include "creditvae/vae.hpp"
#include "test_support.hpp"

#include <cmath>
#include <numbers>

using namespace creditvae;
namespace ts = testing_support;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Architecture tiny(std::size_t dx, std::size_t dz, std::size_t layers, std::size_t units) {
  Architecture a;
  a.input_dim = dx;
  a.latent_dim = dz;
  a.hidden_layers = layers;
  a.hidden_units = units;
  return a;
}

}  // namespace

TEST_CASE("architecture presets reproduce the tested grid") {
  struct Row {
    const char* id;
    std::size_t dz, layers, units;
    double lr;
  };
  const Row rows[] = {{"arch1", 2, 1, 5, 0.01},    {"arch2", 2, 1, 10, 0.01},   {"arch3", 2, 1, 20, 0.01},
                      {"arch4", 2, 1, 30, 0.01},   {"arch5", 2, 1, 40, 0.01},   {"arch6", 2, 1, 50, 0.01},
                      {"arch7", 2, 1, 60, 0.01},   {"arch8", 2, 1, 70, 0.01},   {"arch9", 2, 1, 30, 0.007},
                      {"arch10", 2, 1, 30, 0.008}, {"arch11", 2, 1, 30, 0.009}, {"arch12", 2, 1, 30, 0.011},
                      {"arch13", 2, 1, 30, 0.012}, {"arch14", 2, 1, 30, 0.013}, {"arch15", 5, 1, 30, 0.01},
                      {"arch16", 10, 1, 30, 0.01}, {"arch17", 15, 1, 30, 0.01}, {"arch18", 2, 2, 30, 0.01},
                      {"arch19", 2, 3, 30, 0.01},  {"arch20", 2, 4, 30, 0.01},  {"arch21", 2, 5, 30, 0.01}};
  CHECK(architecture_preset_ids().size() == 21);
  for (const auto& r : rows) {
    auto a = architecture_preset(r.id, 13);
    CHECK(a.input_dim == 13);
    CHECK(a.latent_dim == r.dz);
    CHECK(a.hidden_layers == r.layers);
    CHECK(a.hidden_units == r.units);
    CHECK(a.learning_rate == r.lr);
    CHECK(a.epochs == 50);
    CHECK(a.preset_id == r.id);
  }
  CHECK_THROWS_AS(architecture_preset("arch22", 3), ConfigError);
  auto a = architecture_preset("arch19", 4);
  CHECK(architecture_from_json(to_json(a)) == a);
}

TEST_CASE("init_params shapes, determinism and Glorot statistics") {
  auto a = architecture_preset("arch4", 20);
  auto p = init_params(a, 7);
  CHECK(p.encoder_hidden[0].weight.rows() == 30);
  CHECK(p.encoder_hidden[0].weight.cols() == 20);
  CHECK(p.encoder_mu.weight.rows() == 2);
  CHECK(p.encoder_mu.weight.cols() == 30);
  CHECK(p.decoder_mu.weight.rows() == 20);
  CHECK(init_params(a, 7) == p);
  CHECK_FALSE(init_params(a, 8) == p);

  const auto& w = p.encoder_hidden[0].weight;
  const double bound = std::sqrt(6.0 / 50.0);
  const double n = static_cast<double>(w.size());
  const double mean = w.mean();
  const double var = (w.array() - mean).square().sum() / (n - 1);
  CHECK(std::abs(mean) <= 3 * std::sqrt(var / n));
  CHECK(w.cwiseAbs().maxCoeff() <= bound);
  CHECK(std::abs(var - bound * bound / 3) < 0.25 * bound * bound / 3);
  CHECK(p.encoder_hidden[0].bias.isZero(0));
}

TEST_CASE("encode examples") {
  SUBCASE("zero network") {
    auto p = VaeParams::zeros(tiny(3, 2, 1, 4));
    auto m = encode(p, Vector::Constant(3, 0.7));
    CHECK(m.mu.isZero(0));
    CHECK(m.log_var.isZero(0));
  }
  SUBCASE("hand-set 1x1x1 network at x=0") {
    auto p = VaeParams::zeros(tiny(1, 1, 1, 1));
    p.encoder_hidden[0].weight(0, 0) = 1;
    p.encoder_mu.weight(0, 0) = 1;
    CHECK(encode(p, Vector::Zero(1)).mu[0] == 0.0);
    CHECK(encode(p, Vector::Constant(1, 0.5)).mu[0] == doctest::Approx(std::tanh(0.5)));
  }
  SUBCASE("dimension mismatch") {
    auto p = VaeParams::zeros(tiny(3, 2, 1, 4));
    CHECK_THROWS_AS(encode(p, Vector::Zero(4)), ContractError);
    CHECK_THROWS_AS(decode(p, Vector::Zero(3)), ContractError);
  }
}

TEST_CASE("encode and decode agree with a naive loop evaluation") {
  std::mt19937_64 rng(99);
  for (const auto& id : architecture_preset_ids()) {
    auto a = architecture_preset(id, 7);
    auto p = ts::random_params(a, rng(), 0.8);
    for (int t = 0; t < 5; ++t) {
      Vector x = ts::random_vector(7, rng);
      auto e = encode(p, x);
      auto o = ts::naive_encode(p, to_std(x));
      for (std::size_t j = 0; j < a.latent_dim; ++j) {
        CHECK(std::abs(e.mu[static_cast<Eigen::Index>(j)] - o.mu[j]) <= 1e-12);
        CHECK(std::abs(e.log_var[static_cast<Eigen::Index>(j)] - o.log_var[j]) <= 1e-12);
      }
      Vector z = ts::normal_vector(a.latent_dim, rng);
      auto d = decode(p, z);
      auto od = ts::naive_decode(p, to_std(z));
      for (std::size_t m = 0; m < 7; ++m) {
        CHECK(std::abs(d.mu[static_cast<Eigen::Index>(m)] - od.mu[m]) <= 1e-12);
        CHECK(std::abs(d.log_var[static_cast<Eigen::Index>(m)] - od.log_var[m]) <= 1e-12);
      }
      CHECK(encode(p, x).mu == e.mu);  // pure
    }
  }
}

TEST_CASE("log-variance heads are clamped to [-10, 10]") {
  auto p = VaeParams::zeros(tiny(2, 2, 1, 3));
  p.encoder_log_var.bias << 50, -50;
  p.decoder_log_var.bias << 50, -50;
  auto e = encode(p, Vector::Zero(2));
  CHECK(e.log_var[0] == 10.0);
  CHECK(e.log_var[1] == -10.0);
  auto d = decode(p, Vector::Zero(2));
  CHECK(d.log_var[0] == 10.0);
  CHECK(d.log_var[1] == -10.0);
}

TEST_CASE("decode range") {
  auto p = VaeParams::zeros(tiny(4, 2, 1, 3));
  CHECK((decode(p, Vector::Zero(2)).mu.array() == 0.5).all());
  p.decoder_mu.bias.setConstant(-30);
  auto d = decode(p, Vector::Zero(2));
  CHECK((d.mu.array() > 0).all());
  CHECK((d.mu.array() < 1e-12).all());
}

TEST_CASE("reparametrize") {
  EncodedMoments m{Vector(2), Vector(2)};
  m.mu << 1, 2;
  m.log_var << std::log(4.0), std::log(9.0);
  Vector eps(2);
  eps << 1, -1;
  auto z = reparametrize(m, eps);
  CHECK(z[0] == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(z[1] == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(reparametrize(m, Vector::Zero(2)) == m.mu);
  m.log_var.setZero();
  CHECK(reparametrize(m, eps) == m.mu + eps);
}

TEST_CASE("ELBO terms on hand examples") {
  SUBCASE("standard normal posterior has zero KL") {
    auto p = VaeParams::zeros(tiny(3, 2, 1, 4));
    CHECK(elbo_terms(p, Vector::Constant(3, 0.2), Vector::Constant(2, 0.3)).kl == 0.0);
  }
  SUBCASE("d_z = 1, mu = 1, log_var = 0") {
    EncodedMoments m{Vector::Ones(1), Vector::Zero(1)};
    CHECK(kl_standard_normal(m) == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("Gaussian peak density") {
    auto p = VaeParams::zeros(tiny(1, 1, 1, 2));
    const auto t = elbo_terms(p, Vector::Constant(1, 0.5), Vector::Zero(1));
    CHECK(t.recon == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-15));
    CHECK(std::abs(t.recon + 0.9189) < 1e-4);
  }
}

TEST_CASE("KL is non-negative for arbitrary encoder outputs") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> mu(-5, 5), lv(-10, 10);
  for (int t = 0; t < 2000; ++t) {
    EncodedMoments m{Vector(3), Vector(3)};
    for (int j = 0; j < 3; ++j) {
      m.mu[j] = t % 3 == 0 ? 0.0 : mu(rng);
      m.log_var[j] = t % 5 == 0 ? 1e-9 * lv(rng) : lv(rng);
    }
    CHECK(kl_standard_normal(m) >= 0.0);
  }
}

TEST_CASE("single-sample recon estimates from independent draws agree") {
  auto a = architecture_preset("arch4", 6);
  auto p = ts::random_params(a, 3, 0.6);
  std::mt19937_64 rng(17);
  Vector x = ts::random_vector(6, rng);
  auto stats = [&]() {
    double s = 0, s2 = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const double r = elbo_terms(p, x, ts::normal_vector(2, rng)).recon;
      s += r;
      s2 += r * r;
    }
    const double mean = s / n;
    return std::pair{mean, (s2 / n - mean * mean) / n};
  };
  auto [m1, v1] = stats();
  auto [m2, v2] = stats();
  CHECK(std::abs(m1 - m2) <= 3 * std::sqrt(v1 + v2));
}

TEST_CASE("analytic gradients match finite differences for every preset") {
  std::mt19937_64 rng(2024);
  for (const auto& id : architecture_preset_ids()) {
    auto a = architecture_preset(id, 5);
    auto p = ts::random_params(a, rng(), 0.5);
    for (int t = 0; t < 2; ++t) {
      Vector x = ts::random_vector(5, rng);
      Vector eps = ts::normal_vector(a.latent_dim, rng);
      auto r = ts::gradient_check(p, x, eps);
      INFO(id << " max relative error " << r.max_relative_error);
      CHECK(r.max_relative_error < 1e-4);
    }
  }
}

TEST_CASE("gradient check survives clamped log-variance heads") {
  auto a = tiny(3, 2, 1, 4);
  auto p = ts::random_params(a, 5, 0.4);
  p.encoder_log_var.bias[0] = 25;   // saturates high
  p.decoder_log_var.bias[1] = -25;  // saturates low
  std::mt19937_64 rng(8);
  auto r = ts::gradient_check(p, ts::random_vector(3, rng), ts::normal_vector(2, rng));
  CHECK(r.max_relative_error < 1e-4);
  auto g = backward(p, ts::random_vector(3, rng), ts::normal_vector(2, rng)).grad;
  CHECK(g.encoder_log_var.bias[0] == 0.0);
  CHECK(g.decoder_log_var.bias[1] == 0.0);
}

TEST_CASE("stationary toy: x equals the decoded mean") {
  auto p = VaeParams::zeros(tiny(1, 1, 1, 1));
  auto g = backward(p, Vector::Constant(1, 0.5), Vector::Constant(1, 0.7)).grad;
  CHECK(g.decoder_mu.weight.isZero(0));
  CHECK(g.decoder_mu.bias.isZero(0));
}

TEST_CASE("KL does not depend on decoder parameters") {
  auto a = architecture_preset("arch18", 4);
  auto p = ts::random_params(a, 6);
  std::mt19937_64 rng(1);
  Vector x = ts::random_vector(4, rng), eps = ts::normal_vector(2, rng);
  const double kl = elbo_terms(p, x, eps).kl;
  auto q = p;
  for (auto& l : q.decoder_hidden) l.weight.array() += 0.3;
  q.decoder_mu.bias.array() -= 1.0;
  q.decoder_log_var.weight.array() *= 2.0;
  CHECK(elbo_terms(q, x, eps).kl == kl);
}

TEST_CASE("adagrad with heavy-ball momentum") {
  auto a = tiny(1, 1, 1, 1);
  auto p = VaeParams::zeros(a);
  auto ones = VaeParams::zeros(a);
  std::vector<double> flat(ones.parameter_count(), 1.0);
  ones.assign_flat(flat);

  SUBCASE("first unit step moves every parameter by about -lr") {
    auto state = AdagradState::for_params(p);
    adagrad_step(p, ones, state, {0.01, 1e-8, 0.0});
    for (double v : p.flatten()) CHECK(v == doctest::Approx(-0.01).epsilon(1e-6));
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    auto q = ts::random_params(a, 3);
    auto keep = q;
    auto state = AdagradState::for_params(q);
    adagrad_step(q, VaeParams::zeros(a), state, {0.01, 1e-8, 0.001});
    CHECK(q == keep);
  }
  SUBCASE("accumulator sums squared gradients") {
    auto state = AdagradState::for_params(p);
    auto g = ones;
    g *= 3.0;
    adagrad_step(p, g, state, {0.01, 1e-8, 0.001});
    g = ones;
    g *= 4.0;
    adagrad_step(p, g, state, {0.01, 1e-8, 0.001});
    for (double v : state.accumulator.flatten()) CHECK(v == 25.0);
  }
  SUBCASE("velocity carries momentum") {
    auto state = AdagradState::for_params(p);
    adagrad_step(p, ones, state, {0.1, 0.0, 0.5});
    adagrad_step(p, ones, state, {0.1, 0.0, 0.5});
    // v1 = 0.1, v2 = 0.5 * 0.1 + 0.1 / sqrt(2)
    const double v2 = 0.05 + 0.1 / std::sqrt(2.0);
    for (double v : state.velocity.flatten()) CHECK(v == doctest::Approx(v2).epsilon(1e-14));
    for (double v : p.flatten()) CHECK(v == doctest::Approx(-(0.1 + v2)).epsilon(1e-14));
  }
  SUBCASE("accumulators never decrease") {
    auto q = ts::random_params(a, 9);
    auto state = AdagradState::for_params(q);
    std::vector<double> prev = state.accumulator.flatten();
    for (int s = 0; s < 20; ++s) {
      auto g = ts::random_params(a, 100 + static_cast<std::uint64_t>(s), 2.0);
      adagrad_step(q, g, state, {0.01, 1e-8, 0.001});
      auto now = state.accumulator.flatten();
      for (std::size_t k = 0; k < now.size(); ++k) CHECK(now[k] >= prev[k]);
      prev = now;
    }
  }
}

namespace {

Matrix two_cluster_data(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, 0.05);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double c = i % 2 == 0 ? 0.25 : 0.75;
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = std::clamp(c + g(rng), 0.0, 1.0);
  }
  return m;
}

}  // namespace

TEST_CASE("training lowers the negative ELBO and is deterministic") {
  const Matrix data = two_cluster_data(600, 6, 3);
  TrainConfig cfg;
  cfg.architecture = architecture_preset("arch1", 6);
  cfg.seed = 12;
  auto r1 = train(data, cfg);
  REQUIRE(r1.history.epochs.size() == 50);
  double first = 0, last = 0;
  for (int e = 0; e < 5; ++e) {
    first += r1.history.epochs[static_cast<std::size_t>(e)].neg_elbo;
    last += r1.history.epochs[static_cast<std::size_t>(45 + e)].neg_elbo;
  }
  CHECK(last < first);
  CHECK(r1.history.epochs.back().neg_elbo < r1.history.epochs.front().neg_elbo);
  for (const auto& e : r1.history.epochs) CHECK(e.kl >= 0.0);

  auto r2 = train(data, cfg);
  CHECK(r2.history == r1.history);
  CHECK(r2.params == r1.params);
}

TEST_CASE("training edge cases") {
  const Matrix data = two_cluster_data(200, 3, 1);
  TrainConfig cfg;
  cfg.architecture = architecture_preset("arch1", 3);
  cfg.architecture.epochs = 0;
  cfg.seed = 5;
  auto r = train(data, cfg);
  CHECK(r.params == init_params(cfg.architecture, derive_seed(5, 0)));
  CHECK(r.history.epochs.empty());

  cfg.architecture.epochs = 1;
  CHECK_THROWS_AS(train(data.topRows(50), cfg), ContractError);

  Matrix bad = data;
  bad(17, 1) = std::numeric_limits<double>::quiet_NaN();
  try {
    train(bad, cfg);
    FAIL("expected TrainError");
  } catch (const TrainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("epoch 1") != std::string::npos);
    CHECK(msg.find("batch") != std::string::npos);
  }
}

TEST_CASE("the logger sees every log_every-th epoch") {
  const Matrix data = two_cluster_data(200, 3, 1);
  TrainConfig cfg;
  cfg.architecture = architecture_preset("arch1", 3);
  cfg.architecture.epochs = 7;
  cfg.log_every = 3;
  std::vector<std::size_t> seen;
  std::vector<EpochStats> logged;
  auto r = train(data, cfg, [&](std::size_t e, const EpochStats& s) {
    seen.push_back(e);
    logged.push_back(s);
  });
  CHECK(seen == std::vector<std::size_t>{3, 6, 7});
  REQUIRE(logged.size() == 3);
  CHECK(logged[0] == r.history.epochs[2]);
  CHECK(logged[2] == r.history.epochs[6]);
}

TEST_CASE("parameter files") {
  auto dir = ts::temp_dir("vae_params");
  auto a = architecture_preset("arch19", 5);
  auto p = ts::random_params(a, 77);
  p.encoder_mu.bias[0] = 0.1 + 0.2;  // not exactly representable in short decimal
  save_params(p, dir / "p.json");
  CHECK(load_params(dir / "p.json") == p);

  const std::string text = ts::read_text(dir / "p.json");
  ts::write_text(dir / "trunc.json", text.substr(0, text.size() / 2));
  CHECK_THROWS_AS(load_params(dir / "trunc.json"), LoadError);

  auto j = nlohmann::json::parse(text);
  j["architecture"]["hidden_units"] = 29;
  CHECK_THROWS_AS(params_from_json(j), ContractError);

  auto v = nlohmann::json::parse(text);
  v["version"] = 99;
  CHECK_THROWS_AS(params_from_json(v), LoadError);

  TrainHistory h;
  h.epochs = {{1.5, -1.0, 0.5}, {1.25, -0.75, 0.5}};
  write_history_csv(h, dir / "h.csv");
  const std::string csv = ts::read_text(dir / "h.csv");
  CHECK(csv.rfind("epoch,neg_elbo,recon,kl\n", 0) == 0);
  CHECK(csv.find("\n2,1.25,-0.75,0.5\n") != std::string::npos);
}
