#pragma once

#include "creditvae/common.hpp"
#include "creditvae/embed.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace creditvae {

struct LabelingConfig {
  std::size_t n_min = 50;       // both halves of an accepted split need more than n_min points
  double rho = 0.25;            // accepted splits need centroid distance above rho
  std::size_t subsample_cap = 2000;
  std::size_t exact_max = 16;   // bisections of at most this many points are solved exactly
  std::uint64_t seed = 0;

  /// n_min = max(50, 0.5% of n), rho = 0.25.
  static LabelingConfig defaults_for(std::size_t n);
  void validate() const;
};

struct Bisection {
  std::vector<int> side;  // 0 or 1 per input point
  Vector centroid0;
  Vector centroid1;
  std::size_t size0 = 0;
  std::size_t size1 = 0;
};

/// Two-way split of `points` under Ward's criterion (within-cluster sum of
/// squares). Small inputs are enumerated exactly; larger ones use
/// agglomerative Ward linkage cut at two clusters, on a seeded subsample when
/// above the cap. Returns nullopt when all points coincide.
std::optional<Bisection> ward_bisect(const Matrix& points, const LabelingConfig& cfg, std::uint64_t seed = 0);

/// Agglomerative Ward (nearest-neighbour chain, Lance-Williams updates) cut at
/// two clusters. Side 0 holds point 0.
std::vector<int> ward_agglomerative_two(const Matrix& points);
std::vector<int> ward_agglomerative_two_serial(const Matrix& points);

/// Minimum within-cluster sum of squares over all 2^(m-1)-1 bipartitions.
std::vector<int> exact_ward_bipartition(const Matrix& points);

/// Sum over both sides of squared distances to the side centroid.
double within_sum_of_squares(const Matrix& points, const std::vector<int>& side);

struct AcceptedSplit {
  std::size_t size0;
  std::size_t size1;
  double centroid_distance;
};

struct ClusterAssignment {
  std::vector<int> labels;  // 1..L, largest cluster first
  Matrix centroids;         // row k-1 is cluster k
  std::vector<std::size_t> sizes;
  std::vector<AcceptedSplit> accepted_splits;

  std::size_t cluster_count() const { return sizes.size(); }
};

/// Iterative bisecting labelling of the latent space: FIFO work queue, a
/// split is kept iff both halves exceed n_min and centroids are further
/// apart than rho.
ClusterAssignment label_latent(const LatentEmbedding& emb, const LabelingConfig& cfg);
ClusterAssignment label_points(const Matrix& points, const LabelingConfig& cfg);

/// Nearest-centroid label; ties go to the smaller cluster id.
std::vector<int> assign_new(const ClusterAssignment& asg, const Matrix& new_points);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

void write_assignment_csv(const ClusterAssignment& asg, const std::vector<std::size_t>& row_index,
                          const std::filesystem::path& path);
nlohmann::json assignment_summary(const ClusterAssignment& asg, const LabelingConfig& cfg);

/// Reads row_id,cluster pairs.
std::vector<std::pair<std::size_t, int>> read_assignment_csv(const std::filesystem::path& path);

}  // namespace creditvae
