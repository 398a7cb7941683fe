#include "creditvae/vae.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace creditvae {

namespace {

constexpr int kParamsVersion = 1;
constexpr const char* kParamsFormat = "creditvae.vae_params";

struct PresetRow {
  const char* id;
  std::size_t latent;
  std::size_t layers;
  std::size_t units;
  double lr;
  std::size_t epochs;
};

constexpr PresetRow kPresets[] = {
    {"arch1", 2, 1, 5, 0.01, 50},    {"arch2", 2, 1, 10, 0.01, 50},   {"arch3", 2, 1, 20, 0.01, 50},
    {"arch4", 2, 1, 30, 0.01, 50},   {"arch5", 2, 1, 40, 0.01, 50},   {"arch6", 2, 1, 50, 0.01, 50},
    {"arch7", 2, 1, 60, 0.01, 50},   {"arch8", 2, 1, 70, 0.01, 50},   {"arch9", 2, 1, 30, 0.007, 50},
    {"arch10", 2, 1, 30, 0.008, 50}, {"arch11", 2, 1, 30, 0.009, 50}, {"arch12", 2, 1, 30, 0.011, 50},
    {"arch13", 2, 1, 30, 0.012, 50}, {"arch14", 2, 1, 30, 0.013, 50}, {"arch15", 5, 1, 30, 0.01, 50},
    {"arch16", 10, 1, 30, 0.01, 50}, {"arch17", 15, 1, 30, 0.01, 50}, {"arch18", 2, 2, 30, 0.01, 50},
    {"arch19", 2, 3, 30, 0.01, 50},  {"arch20", 2, 4, 30, 0.01, 50},  {"arch21", 2, 5, 30, 0.01, 50},
};

double sigmoid(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

DenseLayer zero_layer(std::size_t out, std::size_t in) {
  return {Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in)),
          Vector::Zero(static_cast<Eigen::Index>(out))};
}

Vector clamp_log_var(const Vector& raw) {
  return raw.array().min(kLogVarClamp).max(-kLogVarClamp).matrix();
}

// 1 where the clamp is inactive, 0 where it cuts the gradient.
Vector clamp_mask(const Vector& raw) {
  return (raw.array().abs() <= kLogVarClamp).cast<double>().matrix();
}

struct ForwardCache {
  std::vector<Vector> enc;  // enc[0] = x, enc[l + 1] = tanh layer l output
  Vector mu_z, lv_z_raw, lv_z, sigma_z, z;
  std::vector<Vector> dec;  // dec[0] = z
  Vector mu_x, lv_x_raw, lv_x;
};

void check_dim(const Eigen::Ref<const Vector>& v, std::size_t expected, const char* what) {
  if (static_cast<std::size_t>(v.size()) != expected) {
    throw ContractError(std::string(what) + ": expected dimension " + std::to_string(expected) + ", got " +
                        std::to_string(v.size()));
  }
}

Vector hidden_stack(const std::vector<DenseLayer>& layers, Vector h, std::vector<Vector>* trace) {
  if (trace) trace->push_back(h);
  for (const auto& layer : layers) {
    h = (layer.weight * h + layer.bias).array().tanh().matrix();
    if (trace) trace->push_back(h);
  }
  return h;
}

void forward(const VaeParams& p, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& eps,
             ForwardCache& c) {
  c.enc.clear();
  c.dec.clear();
  Vector h = hidden_stack(p.encoder_hidden, x, &c.enc);
  c.mu_z = p.encoder_mu.weight * h + p.encoder_mu.bias;
  c.lv_z_raw = p.encoder_log_var.weight * h + p.encoder_log_var.bias;
  c.lv_z = clamp_log_var(c.lv_z_raw);
  c.sigma_z = (0.5 * c.lv_z.array()).exp().matrix();
  c.z = c.mu_z + c.sigma_z.cwiseProduct(eps);
  Vector g = hidden_stack(p.decoder_hidden, c.z, &c.dec);
  Vector a = p.decoder_mu.weight * g + p.decoder_mu.bias;
  c.mu_x = a.unaryExpr([](double v) { return sigmoid(v); });
  c.lv_x_raw = p.decoder_log_var.weight * g + p.decoder_log_var.bias;
  c.lv_x = clamp_log_var(c.lv_x_raw);
}

double kl_from(const Vector& mu, const Vector& lv) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < mu.size(); ++j) s += mu[j] * mu[j] + (std::expm1(lv[j]) - lv[j]);
  return 0.5 * s;
}

double log_density(const Eigen::Ref<const Vector>& x, const Vector& mu, const Vector& lv) {
  constexpr double kLog2Pi = 1.8378770664093454835606594728112;
  double s = 0.0;
  for (Eigen::Index m = 0; m < x.size(); ++m) {
    const double r = x[m] - mu[m];
    s += kLog2Pi + lv[m] + r * r * std::exp(-lv[m]);
  }
  return -0.5 * s;
}

// Backpropagates d/d(output of stack) through tanh layers, filling gradients.
// Returns d/d(input of stack).
Vector backprop_stack(const std::vector<DenseLayer>& layers, const std::vector<Vector>& trace, Vector upstream,
                      std::vector<DenseLayer>& grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Vector& out = trace[l + 1];
    Vector da = upstream.cwiseProduct((1.0 - out.array().square()).matrix());
    grads[l].weight.noalias() = da * trace[l].transpose();
    grads[l].bias = da;
    upstream = layers[l].weight.transpose() * da;
  }
  return upstream;
}

}  // namespace

void Architecture::validate() const {
  if (input_dim < 1 || latent_dim < 1 || hidden_layers < 1 || hidden_units < 1) {
    throw ContractError("architecture: all dimensions and counts must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw ContractError("architecture: learning rate must be positive");
}

Architecture architecture_preset(const std::string& id, std::size_t input_dim) {
  for (const auto& row : kPresets) {
    if (id == row.id) {
      Architecture a{input_dim, row.latent, row.layers, row.units, row.lr, row.epochs, row.id};
      a.validate();
      return a;
    }
  }
  throw ConfigError("unknown architecture preset '" + id + "'");
}

std::vector<std::string> architecture_preset_ids() {
  std::vector<std::string> ids;
  for (const auto& row : kPresets) ids.emplace_back(row.id);
  return ids;
}

nlohmann::json to_json(const Architecture& a) {
  return {{"input_dim", a.input_dim},   {"latent_dim", a.latent_dim},       {"hidden_layers", a.hidden_layers},
          {"hidden_units", a.hidden_units}, {"learning_rate", a.learning_rate}, {"epochs", a.epochs},
          {"preset_id", a.preset_id}};
}

Architecture architecture_from_json(const nlohmann::json& j) {
  Architecture a;
  a.input_dim = j.at("input_dim").get<std::size_t>();
  a.latent_dim = j.at("latent_dim").get<std::size_t>();
  a.hidden_layers = j.at("hidden_layers").get<std::size_t>();
  a.hidden_units = j.at("hidden_units").get<std::size_t>();
  a.learning_rate = j.at("learning_rate").get<double>();
  a.epochs = j.at("epochs").get<std::size_t>();
  a.preset_id = j.value("preset_id", std::string());
  a.validate();
  return a;
}

VaeParams VaeParams::zeros(const Architecture& arch) {
  arch.validate();
  VaeParams p;
  p.arch = arch;
  const auto h = arch.hidden_units;
  for (std::size_t l = 0; l < arch.hidden_layers; ++l) {
    p.encoder_hidden.push_back(zero_layer(h, l == 0 ? arch.input_dim : h));
    p.decoder_hidden.push_back(zero_layer(h, l == 0 ? arch.latent_dim : h));
  }
  p.encoder_mu = zero_layer(arch.latent_dim, h);
  p.encoder_log_var = zero_layer(arch.latent_dim, h);
  p.decoder_mu = zero_layer(arch.input_dim, h);
  p.decoder_log_var = zero_layer(arch.input_dim, h);
  return p;
}

std::size_t VaeParams::parameter_count() const {
  std::size_t n = 0;
  for_each_layer([&](const std::string&, const DenseLayer& l) {
    n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  });
  return n;
}

bool VaeParams::all_finite() const {
  bool ok = true;
  for_each_layer([&](const std::string&, const DenseLayer& l) {
    ok = ok && l.weight.allFinite() && l.bias.allFinite();
  });
  return ok;
}

std::vector<double> VaeParams::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for_each_layer([&](const std::string&, const DenseLayer& l) {
    out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  });
  return out;
}

void VaeParams::assign_flat(std::span<const double> values) {
  if (values.size() != parameter_count()) throw ContractError("assign_flat: size mismatch");
  std::size_t pos = 0;
  for_each_layer([&](const std::string&, DenseLayer& l) {
    std::copy_n(values.data() + pos, l.weight.size(), l.weight.data());
    pos += static_cast<std::size_t>(l.weight.size());
    std::copy_n(values.data() + pos, l.bias.size(), l.bias.data());
    pos += static_cast<std::size_t>(l.bias.size());
  });
}

VaeParams& VaeParams::operator+=(const VaeParams& other) {
  std::vector<const DenseLayer*> src;
  other.for_each_layer([&](const std::string&, const DenseLayer& l) { src.push_back(&l); });
  std::size_t k = 0;
  for_each_layer([&](const std::string&, DenseLayer& l) {
    l.weight += src[k]->weight;
    l.bias += src[k]->bias;
    ++k;
  });
  return *this;
}

VaeParams& VaeParams::operator*=(double s) {
  for_each_layer([&](const std::string&, DenseLayer& l) {
    l.weight *= s;
    l.bias *= s;
  });
  return *this;
}

bool VaeParams::operator==(const VaeParams& other) const {
  if (!(arch == other.arch)) return false;
  return flatten() == other.flatten();
}

EncodedMoments encode(const VaeParams& p, const Eigen::Ref<const Vector>& x) {
  check_dim(x, p.arch.input_dim, "encode");
  Vector h = hidden_stack(p.encoder_hidden, x, nullptr);
  return {p.encoder_mu.weight * h + p.encoder_mu.bias,
          clamp_log_var(p.encoder_log_var.weight * h + p.encoder_log_var.bias)};
}

DecodedMoments decode(const VaeParams& p, const Eigen::Ref<const Vector>& z) {
  check_dim(z, p.arch.latent_dim, "decode");
  Vector g = hidden_stack(p.decoder_hidden, z, nullptr);
  Vector a = p.decoder_mu.weight * g + p.decoder_mu.bias;
  return {a.unaryExpr([](double v) { return sigmoid(v); }),
          clamp_log_var(p.decoder_log_var.weight * g + p.decoder_log_var.bias)};
}

Vector reparametrize(const EncodedMoments& m, const Eigen::Ref<const Vector>& eps) {
  if (eps.size() != m.mu.size()) throw ContractError("reparametrize: eps dimension mismatch");
  return m.mu + (0.5 * m.log_var.array()).exp().matrix().cwiseProduct(eps);
}

double kl_standard_normal(const EncodedMoments& m) { return kl_from(m.mu, m.log_var); }

double gaussian_log_density(const Eigen::Ref<const Vector>& x, const DecodedMoments& m) {
  return log_density(x, m.mu, m.log_var);
}

ElboTerms elbo_terms(const VaeParams& p, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& eps) {
  check_dim(x, p.arch.input_dim, "elbo_terms");
  check_dim(eps, p.arch.latent_dim, "elbo_terms eps");
  ForwardCache c;
  forward(p, x, eps, c);
  return {log_density(x, c.mu_x, c.lv_x), kl_from(c.mu_z, c.lv_z)};
}

Gradient backward(const VaeParams& p, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& eps) {
  check_dim(x, p.arch.input_dim, "backward");
  check_dim(eps, p.arch.latent_dim, "backward eps");
  ForwardCache c;
  forward(p, x, eps, c);

  Gradient out{VaeParams::zeros(p.arch), {log_density(x, c.mu_x, c.lv_x), kl_from(c.mu_z, c.lv_z)}};
  VaeParams& g = out.grad;

  // Loss = 0.5 sum_m [log 2pi + lv_x + r^2 exp(-lv_x)] + 0.5 sum_j [mu_z^2 + exp(lv_z) - 1 - lv_z]
  const Vector inv_var_x = (-c.lv_x.array()).exp().matrix();
  const Vector r = x - c.mu_x;
  const Vector d_mu_x = -r.cwiseProduct(inv_var_x);
  const Vector d_a_mu_x = d_mu_x.cwiseProduct((c.mu_x.array() * (1.0 - c.mu_x.array())).matrix());
  const Vector d_lv_x =
      (0.5 * (1.0 - r.array().square() * inv_var_x.array())).matrix().cwiseProduct(clamp_mask(c.lv_x_raw));

  const Vector& g_top = c.dec.back();
  g.decoder_mu.weight.noalias() = d_a_mu_x * g_top.transpose();
  g.decoder_mu.bias = d_a_mu_x;
  g.decoder_log_var.weight.noalias() = d_lv_x * g_top.transpose();
  g.decoder_log_var.bias = d_lv_x;
  Vector d_g = p.decoder_mu.weight.transpose() * d_a_mu_x + p.decoder_log_var.weight.transpose() * d_lv_x;
  const Vector d_z = backprop_stack(p.decoder_hidden, c.dec, std::move(d_g), g.decoder_hidden);

  const Vector d_mu_z = d_z + c.mu_z;
  const Vector d_lv_z = (0.5 * d_z.cwiseProduct(eps).cwiseProduct(c.sigma_z).array() +
                         0.5 * (c.lv_z.array().exp() - 1.0))
                            .matrix()
                            .cwiseProduct(clamp_mask(c.lv_z_raw));

  const Vector& h_top = c.enc.back();
  g.encoder_mu.weight.noalias() = d_mu_z * h_top.transpose();
  g.encoder_mu.bias = d_mu_z;
  g.encoder_log_var.weight.noalias() = d_lv_z * h_top.transpose();
  g.encoder_log_var.bias = d_lv_z;
  Vector d_h = p.encoder_mu.weight.transpose() * d_mu_z + p.encoder_log_var.weight.transpose() * d_lv_z;
  backprop_stack(p.encoder_hidden, c.enc, std::move(d_h), g.encoder_hidden);
  return out;
}

namespace {

BatchGradient batch_gradient_impl(const VaeParams& p, const Matrix& data, std::span<const std::size_t> rows,
                                  const Matrix& eps, bool parallel) {
  if (rows.empty()) throw ContractError("batch_gradient: empty batch");
  if (static_cast<std::size_t>(eps.rows()) != rows.size() ||
      static_cast<std::size_t>(eps.cols()) != p.arch.latent_dim) {
    throw ContractError("batch_gradient: eps shape mismatch");
  }
  if (static_cast<std::size_t>(data.cols()) != p.arch.input_dim) {
    throw ContractError("batch_gradient: data width " + std::to_string(data.cols()) + " != input_dim " +
                        std::to_string(p.arch.input_dim));
  }
  const auto b = static_cast<std::ptrdiff_t>(rows.size());
  std::vector<Gradient> per_sample(rows.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t k = 0; k < b; ++k) {
    const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(k)]);
    const Vector x = data.row(i).transpose();
    const Vector e = eps.row(k).transpose();
    per_sample[static_cast<std::size_t>(k)] = backward(p, x, e);
  }
  BatchGradient out{VaeParams::zeros(p.arch), 0.0, 0.0};
  for (const auto& s : per_sample) {
    out.grad += s.grad;
    out.recon_sum += s.terms.recon;
    out.kl_sum += s.terms.kl;
  }
  out.grad *= 1.0 / static_cast<double>(rows.size());
  return out;
}

}  // namespace

BatchGradient batch_gradient(const VaeParams& p, const Matrix& data, std::span<const std::size_t> rows,
                             const Matrix& eps) {
  return batch_gradient_impl(p, data, rows, eps, true);
}

BatchGradient batch_gradient_serial(const VaeParams& p, const Matrix& data, std::span<const std::size_t> rows,
                                    const Matrix& eps) {
  return batch_gradient_impl(p, data, rows, eps, false);
}

AdagradState AdagradState::for_params(const VaeParams& p) {
  return {VaeParams::zeros(p.arch), VaeParams::zeros(p.arch)};
}

void adagrad_step(VaeParams& p, const VaeParams& grad, AdagradState& state, const AdagradSettings& s) {
  std::vector<const DenseLayer*> gl;
  std::vector<DenseLayer*> al, vl;
  grad.for_each_layer([&](const std::string&, const DenseLayer& l) { gl.push_back(&l); });
  state.accumulator.for_each_layer([&](const std::string&, DenseLayer& l) { al.push_back(&l); });
  state.velocity.for_each_layer([&](const std::string&, DenseLayer& l) { vl.push_back(&l); });
  if (gl.size() != al.size() || gl.size() != vl.size()) throw ContractError("adagrad_step: shape mismatch");

  auto update = [&](auto& param, const auto& g, auto& acc, auto& vel) {
    if (param.size() != g.size() || acc.size() != g.size()) throw ContractError("adagrad_step: shape mismatch");
    acc.array() += g.array().square();
    vel.array() = s.momentum * vel.array() + s.learning_rate * g.array() / (acc.array().sqrt() + s.epsilon);
    param -= vel;
  };
  std::size_t k = 0;
  p.for_each_layer([&](const std::string&, DenseLayer& l) {
    update(l.weight, gl[k]->weight, al[k]->weight, vl[k]->weight);
    update(l.bias, gl[k]->bias, al[k]->bias, vl[k]->bias);
    ++k;
  });
}

VaeParams init_params(const Architecture& arch, std::uint64_t seed) {
  VaeParams p = VaeParams::zeros(arch);
  std::mt19937_64 rng(seed);
  p.for_each_layer([&](const std::string&, DenseLayer& l) {
    const double a = std::sqrt(6.0 / static_cast<double>(l.weight.rows() + l.weight.cols()));
    std::uniform_real_distribution<double> u(-a, a);
    for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r) l.weight(r, c) = u(rng);
    }
  });
  return p;
}

void TrainConfig::validate() const {
  architecture.validate();
  if (batch_size < 1) throw ContractError("train: batch_size must be >= 1");
  if (!(adagrad_epsilon > 0.0)) throw ContractError("train: adagrad_epsilon must be > 0");
}

TrainResult train(const Matrix& data, const TrainConfig& cfg, const EpochLogger& log) {
  cfg.validate();
  const auto& arch = cfg.architecture;
  const auto n = static_cast<std::size_t>(data.rows());
  if (n < cfg.batch_size) {
    throw ContractError("train: " + std::to_string(n) + " rows < batch_size " + std::to_string(cfg.batch_size));
  }
  if (static_cast<std::size_t>(data.cols()) != arch.input_dim) {
    throw ContractError("train: data width does not match architecture input_dim");
  }

  TrainResult result{init_params(arch, derive_seed(cfg.seed, 0)), {}};
  VaeParams& params = result.params;
  AdagradState state = AdagradState::for_params(params);
  const AdagradSettings settings{arch.learning_rate, cfg.adagrad_epsilon, cfg.momentum};

  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 1));
  std::mt19937_64 noise_rng(derive_seed(cfg.seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 0; epoch < arch.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double recon = 0.0;
    double kl = 0.0;
    for (std::size_t start = 0, batch = 0; start < n; start += cfg.batch_size, ++batch) {
      const std::size_t len = std::min(cfg.batch_size, n - start);
      std::span<const std::size_t> rows(order.data() + start, len);
      Matrix eps(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(arch.latent_dim));
      for (Eigen::Index r = 0; r < eps.rows(); ++r) {
        for (Eigen::Index c = 0; c < eps.cols(); ++c) eps(r, c) = normal(noise_rng);
      }
      BatchGradient bg = batch_gradient(params, data, rows, eps);
      if (!std::isfinite(bg.recon_sum) || !std::isfinite(bg.kl_sum) || !bg.grad.all_finite()) {
        throw TrainError("train: non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                         std::to_string(batch + 1));
      }
      if (bg.kl_sum < 0.0) {
        throw TrainError("train: negative KL at epoch " + std::to_string(epoch + 1) + ", batch " +
                         std::to_string(batch + 1));
      }
      adagrad_step(params, bg.grad, state, settings);
      recon += bg.recon_sum;
      kl += bg.kl_sum;
    }
    EpochStats stats;
    stats.recon = recon / static_cast<double>(n);
    stats.kl = kl / static_cast<double>(n);
    stats.neg_elbo = stats.kl - stats.recon;
    result.history.epochs.push_back(stats);
    if (log && cfg.log_every > 0 && ((epoch + 1) % cfg.log_every == 0 || epoch + 1 == arch.epochs)) {
      log(epoch + 1, stats);
    }
  }
  return result;
}

nlohmann::json params_to_json(const VaeParams& p) {
  nlohmann::json tensors = nlohmann::json::array();
  p.for_each_layer([&](const std::string& name, const DenseLayer& l) {
    std::vector<double> w(l.weight.data(), l.weight.data() + l.weight.size());
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    tensors.push_back({{"name", name + ".weight"}, {"rows", l.weight.rows()}, {"cols", l.weight.cols()}, {"data", w}});
    tensors.push_back({{"name", name + ".bias"}, {"rows", l.bias.size()}, {"cols", 1}, {"data", b}});
  });
  return {{"format", kParamsFormat}, {"version", kParamsVersion}, {"architecture", to_json(p.arch)},
          {"tensors", tensors}};
}

VaeParams params_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != kParamsFormat) throw LoadError("params: not a parameter file");
  if (j.value("version", -1) != kParamsVersion) {
    throw LoadError("params: unsupported version " + j.value("version", nlohmann::json()).dump());
  }
  VaeParams p = VaeParams::zeros(architecture_from_json(j.at("architecture")));
  const auto& tensors = j.at("tensors");
  std::size_t k = 0;
  auto fill = [&](const std::string& name, auto& target, Eigen::Index rows, Eigen::Index cols) {
    if (k >= tensors.size()) throw ContractError("params: missing tensor " + name);
    const auto& t = tensors[k++];
    if (t.at("name").get<std::string>() != name || t.at("rows").get<Eigen::Index>() != rows ||
        t.at("cols").get<Eigen::Index>() != cols) {
      throw ContractError("params: shape mismatch at tensor " + name + " (expected " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ")");
    }
    auto data = t.at("data").get<std::vector<double>>();
    if (data.size() != static_cast<std::size_t>(rows * cols)) {
      throw ContractError("params: tensor " + name + " has " + std::to_string(data.size()) + " values");
    }
    std::copy(data.begin(), data.end(), target.data());
  };
  p.for_each_layer([&](const std::string& name, DenseLayer& l) {
    fill(name + ".weight", l.weight, l.weight.rows(), l.weight.cols());
    fill(name + ".bias", l.bias, l.bias.size(), 1);
  });
  if (k != tensors.size()) throw ContractError("params: unexpected extra tensors");
  return p;
}

void save_params(const VaeParams& p, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << params_to_json(p).dump() << '\n';
}

VaeParams load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("params " + path.string() + ": corrupt file: " + e.what());
  }
  try {
    return params_from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("params " + path.string() + ": " + e.what());
  }
}

void write_history_csv(const TrainHistory& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "epoch,neg_elbo,recon,kl\n";
  for (std::size_t e = 0; e < h.epochs.size(); ++e) {
    const auto& s = h.epochs[e];
    out << e + 1 << ',' << format_double(s.neg_elbo) << ',' << format_double(s.recon) << ',' << format_double(s.kl)
        << '\n';
  }
}

}  // namespace creditvae
