#include "creditvae/analyze.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

namespace creditvae {

std::vector<ClusterStats> default_rate(const std::vector<int>& labels, const std::vector<int>& y,
                                       std::vector<std::string>* warnings) {
  if (labels.size() != y.size()) throw ContractError("default_rate: labels and y differ in length");
  std::map<int, std::pair<std::size_t, std::size_t>> counts;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& c = counts[labels[i]];
    ++c.first;
    if (y[i] == 1) ++c.second;
  }
  std::vector<ClusterStats> out;
  for (const auto& [id, c] : counts) {
    ClusterStats s;
    s.cluster = id;
    s.n = c.first;
    s.defaults = c.second;
    s.default_rate = static_cast<double>(c.second) / static_cast<double>(c.first);
    std::tie(s.ci_low, s.ci_high) = binomial_ci(s.default_rate, s.n);
    out.push_back(s);
  }
  if (warnings && !counts.empty()) {
    for (int id = 1; id < counts.rbegin()->first; ++id) {
      if (!counts.count(id)) warnings->push_back("cluster " + std::to_string(id) + " is empty; excluded");
    }
  }
  return out;
}

std::pair<double, double> binomial_ci(double dr, std::size_t n, double z) {
  if (n < 1) throw ContractError("binomial_ci: n must be >= 1");
  if (!(dr >= 0.0 && dr <= 1.0)) throw ContractError("binomial_ci: rate outside [0,1]");
  const double half = z * std::sqrt(dr * (1.0 - dr) / static_cast<double>(n));
  return {std::clamp(dr - half, 0.0, 1.0), std::clamp(dr + half, 0.0, 1.0)};
}

std::vector<std::vector<bool>> overlap_matrix(const std::vector<ClusterStats>& stats) {
  const std::size_t k = stats.size();
  std::vector<std::vector<bool>> sep(k, std::vector<bool>(k, false));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      const bool disjoint = stats[a].ci_high < stats[b].ci_low || stats[b].ci_high < stats[a].ci_low;
      sep[a][b] = sep[b][a] = disjoint;
    }
  }
  return sep;
}

SalientResult salient_dimensions(const Matrix& features, const std::vector<int>& labels, const SalientConfig& cfg) {
  if (!(cfg.sd_multiplier > 0.0)) throw ContractError("salient_dimensions: sd_multiplier must be > 0");
  if (static_cast<std::size_t>(features.rows()) != labels.size()) {
    throw ContractError("salient_dimensions: labels length != rows");
  }
  const auto ell = features.cols();
  if (ell < 2) throw ContractError("salient_dimensions: need at least two features");

  std::map<int, std::size_t> sizes;
  for (int l : labels) ++sizes[l];
  if (sizes.size() < 2) throw ContractError("salient_dimensions: need at least two clusters");

  SalientResult out;
  const auto n = static_cast<double>(labels.size());
  out.difference_factors.resize(static_cast<Eigen::Index>(sizes.size()), ell);

  Eigen::Index row = 0;
  for (const auto& [id, n_in] : sizes) {
    out.clusters.push_back(id);
    // Out-of-cluster sums are accumulated directly rather than as total - in,
    // which loses digits when the two are close.
    Vector sum_in = Vector::Zero(ell);
    Vector sum_out = Vector::Zero(ell);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      auto& acc = labels[i] == id ? sum_in : sum_out;
      acc += features.row(static_cast<Eigen::Index>(i)).transpose();
    }
    const double n_out = n - static_cast<double>(n_in);
    std::vector<Eigen::Index> valid;
    for (Eigen::Index v = 0; v < ell; ++v) {
      const double mu_in = sum_in[v] / static_cast<double>(n_in);
      const double mu_out = sum_out[v] / n_out;
      if (std::abs(mu_out) < cfg.epsilon_out) {
        out.difference_factors(row, v) = std::numeric_limits<double>::quiet_NaN();
        out.warnings.push_back("cluster " + std::to_string(id) + ", feature " + std::to_string(v) +
                               ": out-of-cluster mean ~ 0, skipped");
        continue;
      }
      out.difference_factors(row, v) = (mu_in - mu_out) / mu_out;
      valid.push_back(v);
    }
    if (!valid.empty()) {
      double mean = 0.0;
      for (auto v : valid) mean += out.difference_factors(row, v);
      mean /= static_cast<double>(valid.size());
      double var = 0.0;
      for (auto v : valid) {
        const double d = out.difference_factors(row, v) - mean;
        var += d * d;
      }
      const double sd = std::sqrt(var / static_cast<double>(valid.size()));
      if (sd > 0.0) {
        const double lo = mean - cfg.sd_multiplier * sd;
        const double hi = mean + cfg.sd_multiplier * sd;
        for (auto v : valid) {
          const double df = out.difference_factors(row, v);
          if (df <= lo || df >= hi) out.salient.push_back({id, static_cast<std::size_t>(v), df});
        }
      }
    }
    ++row;
  }
  return out;
}

ClusterReport build_report(const std::vector<int>& labels, const std::vector<int>& y, double z) {
  ClusterReport r;
  r.z = z;
  r.clusters = default_rate(labels, y, &r.warnings);
  for (auto& s : r.clusters) std::tie(s.ci_low, s.ci_high) = binomial_ci(s.default_rate, s.n, z);
  r.separated = overlap_matrix(r.clusters);
  return r;
}

nlohmann::json report_to_json(const ClusterReport& r) {
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& s : r.clusters) {
    clusters.push_back({{"cluster", s.cluster},
                        {"default_rate", s.default_rate},
                        {"ci_low", s.ci_low},
                        {"ci_high", s.ci_high},
                        {"n", s.n},
                        {"defaults", s.defaults}});
  }
  nlohmann::json salient = nlohmann::json::array();
  for (const auto& e : r.salient) {
    nlohmann::json j{{"cluster", e.cluster}, {"feature_index", e.feature}, {"df", e.df}};
    if (e.feature < r.feature_names.size()) j["feature"] = r.feature_names[e.feature];
    salient.push_back(std::move(j));
  }
  return {{"z", r.z}, {"clusters", clusters}, {"separated", r.separated}, {"salient", salient},
          {"warnings", r.warnings}};
}

namespace {

double logistic(double a) {
  if (a >= 0.0) return 1.0 / (1.0 + std::exp(-a));
  const double e = std::exp(a);
  return e / (1.0 + e);
}

constexpr double kProbFloor = 1e-15;

}  // namespace

LogisticModel fit_pd_logistic(const Matrix& features, const std::vector<int>& y, const LogisticConfig& cfg) {
  if (static_cast<std::size_t>(features.rows()) != y.size()) throw ContractError("fit_pd_logistic: length mismatch");
  if (features.rows() == 0) throw ContractError("fit_pd_logistic: no rows");
  if (!features.allFinite()) throw ContractError("fit_pd_logistic: non-finite features");
  Vector target(features.rows());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw ContractError("fit_pd_logistic: labels must be binary");
    target[static_cast<Eigen::Index>(i)] = y[i];
  }
  LogisticModel m{Vector::Zero(features.cols()), 0.0};
  const double inv_n = 1.0 / static_cast<double>(features.rows());
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const Vector logits = (features * m.weights).array() + m.intercept;
    const Vector p = logits.unaryExpr([](double a) { return logistic(a); });
    const Vector r = p - target;
    // Mean loss is evaluated only to guard against divergence.
    double loss = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
      const double a = logits[i];
      loss += std::max(a, 0.0) - a * target[i] + std::log1p(std::exp(-std::abs(a)));
    }
    if (!std::isfinite(loss)) throw ContractError("fit_pd_logistic: non-finite loss at iteration " + std::to_string(it));
    m.weights -= cfg.learning_rate * inv_n * (features.transpose() * r);
    m.intercept -= cfg.learning_rate * inv_n * r.sum();
  }
  return m;
}

std::vector<double> predict_pd(const LogisticModel& model, const Matrix& features) {
  if (features.cols() != model.weights.size()) throw ContractError("predict_pd: dimension mismatch");
  std::vector<double> out(static_cast<std::size_t>(features.rows()));
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    const double p = logistic(features.row(i).dot(model.weights) + model.intercept);
    out[static_cast<std::size_t>(i)] = std::clamp(p, kProbFloor, 1.0 - kProbFloor);
  }
  return out;
}

void colormap_export(const LatentEmbedding& emb, const std::vector<double>& pd, const std::string& source_tag,
                     const std::filesystem::path& path) {
  if (pd.size() != emb.size()) throw ContractError("colormap_export: pd length != embedding rows");
  for (double p : pd) {
    if (!(p >= 0.0 && p <= 1.0)) throw ContractError("colormap_export: probability outside [0,1]");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (Eigen::Index j = 0; j < emb.points.cols(); ++j) out << 'z' << j + 1 << ',';
  out << "pd,source_tag\n";
  for (std::size_t i = 0; i < pd.size(); ++i) {
    for (Eigen::Index j = 0; j < emb.points.cols(); ++j) {
      out << format_double(emb.points(static_cast<Eigen::Index>(i), j)) << ',';
    }
    out << format_double(pd[i]) << ',' << source_tag << '\n';
  }
}

}  // namespace creditvae
