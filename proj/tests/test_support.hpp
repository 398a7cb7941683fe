#pragma once

// Helpers and independent oracles shared by the test binaries. Nothing here
// calls the library code path it is used to check.

#include "creditvae/data.hpp"
#include "creditvae/transform.hpp"
#include "creditvae/vae.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace testing_support {

using creditvae::Matrix;
using creditvae::Vector;

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("creditvae_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Table 1 (variable "age"): fine classing counts, Missing first.

struct CountRow {
  const char* label;
  long goods;
  long bads;
};

inline const std::vector<CountRow>& table1_fine() {
  static const std::vector<CountRow> rows = {
      {"Missing", 860, 140}, {"18-22", 3040, 960}, {"23-26", 4920, 1080}, {"27-29", 8100, 900},
      {"30-35", 9500, 500},  {"36-44", 6800, 200}, {"44+", 2940, 60},
  };
  return rows;
}

inline const std::vector<double>& table1_fine_woe() {
  static const std::vector<double> v = {-0.4272, -1.0898, -0.7261, -0.0453, 0.7019, 1.2839, 1.6493};
  return v;
}

inline const std::vector<double>& table1_coarse_woe() {
  static const std::vector<double> v = {-0.4272, -0.5445, 0.9889};
  return v;
}

/// Age bins as interval bins; lower bounds are the first age of each band.
inline creditvae::BinSpec table1_bin_spec() {
  using creditvae::Bin;
  creditvae::BinSpec s;
  s.feature = "age";
  s.kind = creditvae::FeatureKind::numeric;
  const double lowers[] = {-INFINITY, 23, 27, 30, 36, 44};
  const double uppers[] = {23, 27, 30, 36, 44, INFINITY};
  const auto& rows = table1_fine();
  Bin missing;
  missing.kind = Bin::Kind::missing;
  missing.goods = rows[0].goods;
  missing.bads = rows[0].bads;
  s.bins.push_back(missing);
  for (std::size_t k = 1; k < rows.size(); ++k) {
    Bin b;
    b.lower = lowers[k - 1];
    b.upper = uppers[k - 1];
    b.goods = rows[k].goods;
    b.bads = rows[k].bads;
    s.bins.push_back(b);
  }
  return s;
}

/// One row per customer: each fine band collapses to a representative age.
inline creditvae::Dataset table1_dataset() {
  using creditvae::Cell;
  const double ages[] = {20, 25, 28, 32, 40, 50};
  std::vector<std::vector<Cell>> rows;
  std::vector<int> labels;
  const auto& t = table1_fine();
  for (std::size_t k = 0; k < t.size(); ++k) {
    Cell c = k == 0 ? Cell(creditvae::Missing{}) : Cell(ages[k - 1]);
    for (long g = 0; g < t[k].goods; ++g) {
      rows.push_back({c});
      labels.push_back(0);
    }
    for (long b = 0; b < t[k].bads; ++b) {
      rows.push_back({c});
      labels.push_back(1);
    }
  }
  return creditvae::Dataset({{"age", creditvae::FeatureKind::numeric, true}}, std::move(rows), std::move(labels));
}

// ---------------------------------------------------------------------------
// Synthetic portfolios with well separated risk segments.

inline std::vector<creditvae::Segment> risk_segments(const std::vector<double>& default_probs, std::size_t d,
                                                     double spread = 2.0) {
  std::vector<creditvae::Segment> segs;
  for (std::size_t k = 0; k < default_probs.size(); ++k) {
    creditvae::Segment s;
    s.weight = 1.0 / static_cast<double>(default_probs.size());
    s.default_probability = default_probs[k];
    for (std::size_t j = 0; j < d; ++j) {
      creditvae::FeatureGenerator g;
      g.name = "f" + std::to_string(j + 1);
      const double sign = j % 2 == 0 ? 1.0 : -1.0;
      g.mean = sign * spread * static_cast<double>(k) + 0.5 * static_cast<double>(j);
      g.variance = 1.0;
      g.missing_rate = j == 0 ? 0.02 : 0.0;
      s.features.push_back(g);
    }
    segs.push_back(s);
  }
  // Weights must sum to one within 1e-9; fix the rounding on the last one.
  double rest = 1.0;
  for (std::size_t k = 0; k + 1 < segs.size(); ++k) rest -= segs[k].weight;
  segs.back().weight = rest;
  return segs;
}

// ---------------------------------------------------------------------------
// Naive MLP evaluation with explicit loops, used as the encode/decode oracle.

inline std::vector<double> naive_affine(const Eigen::MatrixXd& w, const Vector& b, const std::vector<double>& in) {
  std::vector<double> out(static_cast<std::size_t>(w.rows()));
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double s = b[r];
    for (Eigen::Index c = 0; c < w.cols(); ++c) s += w(r, c) * in[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = s;
  }
  return out;
}

inline std::vector<double> naive_tanh_stack(const std::vector<creditvae::DenseLayer>& layers, std::vector<double> h) {
  for (const auto& l : layers) {
    h = naive_affine(l.weight, l.bias, h);
    for (auto& v : h) v = std::tanh(v);
  }
  return h;
}

inline double clamp10(double v) { return v < -10 ? -10 : (v > 10 ? 10 : v); }

struct NaiveMoments {
  std::vector<double> mu, log_var;
};

inline NaiveMoments naive_encode(const creditvae::VaeParams& p, const std::vector<double>& x) {
  auto h = naive_tanh_stack(p.encoder_hidden, x);
  NaiveMoments m{naive_affine(p.encoder_mu.weight, p.encoder_mu.bias, h),
                 naive_affine(p.encoder_log_var.weight, p.encoder_log_var.bias, h)};
  for (auto& v : m.log_var) v = clamp10(v);
  return m;
}

inline NaiveMoments naive_decode(const creditvae::VaeParams& p, const std::vector<double>& z) {
  auto h = naive_tanh_stack(p.decoder_hidden, z);
  NaiveMoments m{naive_affine(p.decoder_mu.weight, p.decoder_mu.bias, h),
                 naive_affine(p.decoder_log_var.weight, p.decoder_log_var.bias, h)};
  for (auto& v : m.mu) v = 1.0 / (1.0 + std::exp(-v));
  for (auto& v : m.log_var) v = clamp10(v);
  return m;
}

/// Random parameters with entries ~ U(-scale, scale), biases included.
inline creditvae::VaeParams random_params(const creditvae::Architecture& a, std::uint64_t seed, double scale = 0.5) {
  auto p = creditvae::VaeParams::zeros(a);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> flat(p.parameter_count());
  for (auto& v : flat) v = u(rng);
  p.assign_flat(flat);
  return p;
}

inline Vector random_vector(std::size_t n, std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = u(rng);
  return v;
}

inline Vector normal_vector(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = g(rng);
  return v;
}

// ---------------------------------------------------------------------------
// Central finite differences of -(recon - kl) as the gradient oracle.

inline constexpr double kFiniteDifferenceStep = 1e-5;
// Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps entries
// whose true derivative is ~0 from dividing round-off by round-off.
inline constexpr double kRelativeErrorFloor = 1e-6;

struct GradientCheck {
  double max_relative_error = 0.0;
  double magnitude_at_worst = 0.0;  // |analytic| of the entry with the largest relative error
  double max_absolute_error = 0.0;
  std::size_t parameters = 0;
};

inline GradientCheck gradient_check(const creditvae::VaeParams& p, const Vector& x, const Vector& eps) {
  const auto analytic = creditvae::backward(p, x, eps).grad.flatten();
  auto flat = p.flatten();
  auto probe = p;
  auto loss_at = [&](const std::vector<double>& v) {
    probe.assign_flat(v);
    const auto t = creditvae::elbo_terms(probe, x, eps);
    return -(t.recon - t.kl);
  };
  GradientCheck out;
  out.parameters = flat.size();
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double keep = flat[k];
    flat[k] = keep + kFiniteDifferenceStep;
    const double up = loss_at(flat);
    flat[k] = keep - kFiniteDifferenceStep;
    const double down = loss_at(flat);
    flat[k] = keep;
    const double numeric = (up - down) / (2 * kFiniteDifferenceStep);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), kRelativeErrorFloor});
    const double rel = std::abs(analytic[k] - numeric) / denom;
    if (rel > out.max_relative_error) {
      out.max_relative_error = rel;
      out.magnitude_at_worst = std::abs(analytic[k]);
    }
    out.max_absolute_error = std::max(out.max_absolute_error, std::abs(analytic[k] - numeric));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Salient dimensions evaluated literally: in/out means by direct summation,
// difference factors, population mean/std, two-sided threshold.

struct SalientOracle {
  std::vector<int> clusters;
  std::vector<std::vector<double>> df;  // NaN where skipped
  std::vector<std::tuple<int, std::size_t, double>> salient;
};

inline SalientOracle brute_force_salient(const Matrix& x, const std::vector<int>& labels, double sd,
                                         double epsilon_out) {
  SalientOracle o;
  std::vector<int> ids(labels);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  o.clusters = ids;
  const auto n = static_cast<std::size_t>(x.rows());
  const auto ell = static_cast<std::size_t>(x.cols());
  for (int k : ids) {
    std::vector<double> df(ell, std::nan(""));
    std::vector<std::size_t> valid;
    for (std::size_t v = 0; v < ell; ++v) {
      double in = 0, out = 0, n_in = 0, n_out = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const double value = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(v));
        if (labels[i] == k) {
          in += value;
          n_in += 1;
        } else {
          out += value;
          n_out += 1;
        }
      }
      const double mu_in = in / n_in, mu_out = out / n_out;
      if (std::abs(mu_out) < epsilon_out) continue;
      df[v] = (mu_in - mu_out) / mu_out;
      valid.push_back(v);
    }
    if (!valid.empty()) {
      double mean = 0;
      for (auto v : valid) mean += df[v];
      mean /= static_cast<double>(valid.size());
      double ss = 0;
      for (auto v : valid) ss += (df[v] - mean) * (df[v] - mean);
      const double sigma = std::sqrt(ss / static_cast<double>(valid.size()));
      if (sigma > 0) {
        for (auto v : valid) {
          if (df[v] <= mean - sd * sigma || df[v] >= mean + sd * sigma) o.salient.emplace_back(k, v, df[v]);
        }
      }
    }
    o.df.push_back(df);
  }
  return o;
}

// ---------------------------------------------------------------------------
// Gaussian blobs in latent space.

struct Blobs {
  Matrix points;
  std::vector<int> truth;
};

inline Blobs make_blobs(const std::vector<std::vector<double>>& centers, const std::vector<std::size_t>& counts,
                        double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, sigma);
  std::size_t total = 0;
  for (auto c : counts) total += c;
  const auto d = static_cast<Eigen::Index>(centers.front().size());
  Blobs b;
  b.points.resize(static_cast<Eigen::Index>(total), d);
  Eigen::Index row = 0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    for (std::size_t i = 0; i < counts[k]; ++i, ++row) {
      for (Eigen::Index j = 0; j < d; ++j) b.points(row, j) = centers[k][static_cast<std::size_t>(j)] + g(rng);
      b.truth.push_back(static_cast<int>(k));
    }
  }
  return b;
}

/// Minimum within-cluster sum of squares over every bipartition (oracle).
inline std::vector<int> brute_force_bipartition(const Matrix& pts) {
  const auto m = static_cast<std::size_t>(pts.rows());
  double best = INFINITY;
  std::vector<int> best_side;
  for (std::uint64_t code = 1; code < (std::uint64_t{1} << (m - 1)); ++code) {
    std::vector<int> side(m);
    for (std::size_t i = 0; i < m; ++i) side[i] = (i + 1 < m && (code >> i & 1U)) ? 1 : 0;
    double wss = 0;
    for (int s : {0, 1}) {
      Vector c = Vector::Zero(pts.cols());
      double n = 0;
      for (std::size_t i = 0; i < m; ++i)
        if (side[i] == s) {
          c += pts.row(static_cast<Eigen::Index>(i)).transpose();
          n += 1;
        }
      c /= n;
      for (std::size_t i = 0; i < m; ++i)
        if (side[i] == s) wss += (pts.row(static_cast<Eigen::Index>(i)).transpose() - c).squaredNorm();
    }
    if (wss < best) {
      best = wss;
      best_side = side;
    }
  }
  if (best_side[0] == 1)
    for (auto& s : best_side) s = 1 - s;
  return best_side;
}

/// Same partition up to swapping the two side labels.
inline bool same_bipartition(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) return false;
  bool same = true, flipped = true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    same = same && a[i] == b[i];
    flipped = flipped && a[i] != b[i];
  }
  return same || flipped;
}

}  // namespace testing_support
