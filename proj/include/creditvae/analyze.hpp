#pragma once

#include "creditvae/common.hpp"
#include "creditvae/embed.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace creditvae {

inline constexpr double kCriticalValue99 = 2.57;

struct ClusterStats {
  int cluster = 0;
  std::size_t n = 0;
  std::size_t defaults = 0;
  double default_rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

/// dr_j = #{label j, y = 1} / n_j for every cluster id present, ascending id.
/// Ids absent between 1 and the largest id are reported in `warnings`.
std::vector<ClusterStats> default_rate(const std::vector<int>& labels, const std::vector<int>& y,
                                       std::vector<std::string>* warnings = nullptr);

/// dr -/+ z * sqrt(dr (1 - dr) / n), clipped to [0,1].
std::pair<double, double> binomial_ci(double dr, std::size_t n, double z = kCriticalValue99);

/// separated[j][l] is true iff the confidence intervals of j and l are disjoint.
std::vector<std::vector<bool>> overlap_matrix(const std::vector<ClusterStats>& stats);

struct SalientConfig {
  double sd_multiplier = 1.0;
  double epsilon_out = 1e-9;
};

struct SalientEntry {
  int cluster = 0;
  std::size_t feature = 0;
  double df = 0.0;
};

struct SalientResult {
  std::vector<int> clusters;        // ascending id
  Matrix difference_factors;        // clusters x features, NaN where skipped
  std::vector<SalientEntry> salient;  // ordered by cluster, then feature
  std::vector<std::string> warnings;
};

/// Difference factors df = (mu_in - mu_out) / mu_out per cluster and feature;
/// a feature is salient for a cluster when its df lies at least
/// sd_multiplier population standard deviations from that cluster's mean df.
/// Features with |mu_out| < epsilon_out are skipped for that cluster.
SalientResult salient_dimensions(const Matrix& features, const std::vector<int>& labels, const SalientConfig& cfg);

struct ClusterReport {
  double z = kCriticalValue99;
  std::vector<ClusterStats> clusters;
  std::vector<std::vector<bool>> separated;
  std::vector<SalientEntry> salient;
  std::vector<std::string> feature_names;
  std::vector<std::string> warnings;
};

/// default_rate + binomial_ci + overlap_matrix.
ClusterReport build_report(const std::vector<int>& labels, const std::vector<int>& y, double z = kCriticalValue99);

nlohmann::json report_to_json(const ClusterReport& r);

struct LogisticConfig {
  double learning_rate = 0.5;
  std::size_t iterations = 2000;
};

struct LogisticModel {
  Vector weights;
  double intercept = 0.0;
};

/// Full-batch gradient descent on the mean logistic loss.
LogisticModel fit_pd_logistic(const Matrix& features, const std::vector<int>& y, const LogisticConfig& cfg);

/// Probabilities kept strictly inside (0,1).
std::vector<double> predict_pd(const LogisticModel& model, const Matrix& features);

/// CSV: z1..z_dz, pd, source_tag.
void colormap_export(const LatentEmbedding& emb, const std::vector<double>& pd, const std::string& source_tag,
                     const std::filesystem::path& path);

}  // namespace creditvae
