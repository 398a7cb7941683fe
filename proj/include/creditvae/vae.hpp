#pragma once

#include "creditvae/common.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace creditvae {

struct Architecture {
  std::size_t input_dim = 1;
  std::size_t latent_dim = 2;
  std::size_t hidden_layers = 1;
  std::size_t hidden_units = 5;
  double learning_rate = 0.01;
  std::size_t epochs = 50;
  std::string preset_id;

  void validate() const;
  bool operator==(const Architecture&) const = default;
};

/// The 21 tested architectures (arch1..arch21), instantiated for `input_dim`.
Architecture architecture_preset(const std::string& id, std::size_t input_dim);
std::vector<std::string> architecture_preset_ids();

nlohmann::json to_json(const Architecture& a);
Architecture architecture_from_json(const nlohmann::json& j);

/// y = W x + b
struct DenseLayer {
  Eigen::MatrixXd weight;
  Vector bias;
};

/// Encoder: tanh hidden stack, then linear mu and log-variance heads.
/// Decoder: tanh hidden stack, then sigmoid mu and linear log-variance heads.
struct VaeParams {
  Architecture arch;
  std::vector<DenseLayer> encoder_hidden;
  DenseLayer encoder_mu;
  DenseLayer encoder_log_var;
  std::vector<DenseLayer> decoder_hidden;
  DenseLayer decoder_mu;
  DenseLayer decoder_log_var;

  /// Correctly shaped, all entries zero.
  static VaeParams zeros(const Architecture& arch);

  /// Visits every layer in a fixed order along with a stable name.
  template <typename F>
  void for_each_layer(F&& f) {
    for (std::size_t l = 0; l < encoder_hidden.size(); ++l) f("encoder_hidden" + std::to_string(l), encoder_hidden[l]);
    f(std::string("encoder_mu"), encoder_mu);
    f(std::string("encoder_log_var"), encoder_log_var);
    for (std::size_t l = 0; l < decoder_hidden.size(); ++l) f("decoder_hidden" + std::to_string(l), decoder_hidden[l]);
    f(std::string("decoder_mu"), decoder_mu);
    f(std::string("decoder_log_var"), decoder_log_var);
  }
  template <typename F>
  void for_each_layer(F&& f) const {
    const_cast<VaeParams*>(this)->for_each_layer(
        [&](const std::string& name, DenseLayer& layer) { f(name, static_cast<const DenseLayer&>(layer)); });
  }

  std::size_t parameter_count() const;
  bool all_finite() const;

  /// Flattened copy in for_each_layer order (weights column-major, then bias).
  std::vector<double> flatten() const;
  void assign_flat(std::span<const double> values);

  VaeParams& operator+=(const VaeParams& other);
  VaeParams& operator*=(double s);
  bool operator==(const VaeParams& other) const;
};

struct EncodedMoments {
  Vector mu;
  Vector log_var;  // clamped to [-10, 10]
};

struct DecodedMoments {
  Vector mu;       // in (0,1)
  Vector log_var;  // clamped to [-10, 10]
};

inline constexpr double kLogVarClamp = 10.0;

EncodedMoments encode(const VaeParams& p, const Eigen::Ref<const Vector>& x);
DecodedMoments decode(const VaeParams& p, const Eigen::Ref<const Vector>& z);

/// z = mu + exp(log_var / 2) * eps
Vector reparametrize(const EncodedMoments& m, const Eigen::Ref<const Vector>& eps);

struct ElboTerms {
  double recon = 0.0;  // single-sample Gaussian log-likelihood
  double kl = 0.0;     // closed-form KL(q(z|x) || N(0, I))
  double elbo() const { return recon - kl; }
};

/// Closed-form KL of N(mu, diag exp(log_var)) from N(0, I).
double kl_standard_normal(const EncodedMoments& m);

/// log N(x; mu, diag exp(log_var))
double gaussian_log_density(const Eigen::Ref<const Vector>& x, const DecodedMoments& m);

ElboTerms elbo_terms(const VaeParams& p, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& eps);

struct Gradient {
  VaeParams grad;  // d(-ELBO)/d(params)
  ElboTerms terms;
};

/// Reverse-mode gradient of -(recon - kl) for one datum and fixed eps.
Gradient backward(const VaeParams& p, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& eps);

struct BatchGradient {
  VaeParams grad;       // mean over the batch
  double recon_sum = 0.0;
  double kl_sum = 0.0;
};

/// Per-sample gradients over `rows` of `data` (eps row k pairs with rows[k]),
/// combined by ordered summation so the result does not depend on threading.
BatchGradient batch_gradient(const VaeParams& p, const Matrix& data, std::span<const std::size_t> rows,
                             const Matrix& eps);
BatchGradient batch_gradient_serial(const VaeParams& p, const Matrix& data, std::span<const std::size_t> rows,
                                    const Matrix& eps);

struct AdagradState {
  VaeParams accumulator;
  VaeParams velocity;

  static AdagradState for_params(const VaeParams& p);
};

struct AdagradSettings {
  double learning_rate = 0.01;
  double epsilon = 1e-8;
  double momentum = 0.001;
};

/// G += g^2; v = momentum * v + lr * g / (sqrt(G) + eps); p -= v.
void adagrad_step(VaeParams& p, const VaeParams& grad, AdagradState& state, const AdagradSettings& s);

/// Glorot-uniform weights, zero biases.
VaeParams init_params(const Architecture& arch, std::uint64_t seed);

struct TrainConfig {
  Architecture architecture;
  std::size_t batch_size = 100;
  std::uint64_t seed = 0;
  double adagrad_epsilon = 1e-8;
  double momentum = 0.001;
  std::size_t log_every = 0;

  void validate() const;
};

struct EpochStats {
  double neg_elbo = 0.0;
  double recon = 0.0;
  double kl = 0.0;
  bool operator==(const EpochStats&) const = default;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  bool operator==(const TrainHistory&) const = default;
};

struct TrainResult {
  VaeParams params;
  TrainHistory history;
};

using EpochLogger = std::function<void(std::size_t epoch, const EpochStats&)>;

/// Minibatch AEVB on rows of `data` (values in [0,1]).
TrainResult train(const Matrix& data, const TrainConfig& cfg, const EpochLogger& log = {});

nlohmann::json params_to_json(const VaeParams& p);
VaeParams params_from_json(const nlohmann::json& j);
void save_params(const VaeParams& p, const std::filesystem::path& path);
VaeParams load_params(const std::filesystem::path& path);

void write_history_csv(const TrainHistory& h, const std::filesystem::path& path);

}  // namespace creditvae
