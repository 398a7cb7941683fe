#include "creditvae/cluster.hpp"

#include "creditvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace creditvae {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// Upper-triangular condensed storage of a symmetric m x m matrix.
class Condensed {
 public:
  explicit Condensed(std::size_t m) : m_(m), data_(m * (m - 1) / 2) {}
  double& operator()(std::size_t i, std::size_t j) { return data_[index(i, j)]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[index(i, j)]; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return i * m_ - i * (i + 1) / 2 + (j - i - 1);
  }
  std::size_t m_;
  std::vector<double> data_;
};

struct Merge {
  std::size_t a;
  std::size_t b;
  double height;
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

std::vector<int> agglomerative_impl(const Matrix& points, bool parallel) {
  const auto m = static_cast<std::size_t>(points.rows());
  if (m < 2) throw ContractError("ward: need at least two points");
  if (m == 2) return {0, 1};

  Condensed d(m);
  const auto sm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::ptrdiff_t i = 0; i < sm; ++i) {
    for (std::ptrdiff_t j = i + 1; j < sm; ++j) {
      d(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = (points.row(i) - points.row(j)).squaredNorm();
    }
  }

  std::vector<double> size(m, 1.0);
  std::vector<char> active(m, 1);
  std::vector<std::size_t> chain;
  std::vector<Merge> merges;
  merges.reserve(m - 1);

  for (std::size_t remaining = m; remaining > 1; --remaining) {
    if (chain.empty()) {
      for (std::size_t k = 0; k < m; ++k) {
        if (active[k]) {
          chain.push_back(k);
          break;
        }
      }
    }
    std::size_t a = kNone;
    std::size_t b = kNone;
    double best = 0.0;
    for (;;) {
      a = chain.back();
      b = chain.size() >= 2 ? chain[chain.size() - 2] : kNone;
      best = b == kNone ? std::numeric_limits<double>::infinity() : d(a, b);
      for (std::size_t k = 0; k < m; ++k) {
        if (!active[k] || k == a) continue;
        const double v = d(a, k);
        if (v < best) {
          best = v;
          b = k;
        }
      }
      if (chain.size() >= 2 && b == chain[chain.size() - 2]) break;
      chain.push_back(b);
    }
    chain.pop_back();
    chain.pop_back();
    merges.push_back({a, b, best});

    const std::size_t keep = std::min(a, b);
    const std::size_t drop = std::max(a, b);
    const double sa = size[a];
    const double sb = size[b];
    const double dab = d(a, b);
    for (std::size_t k = 0; k < m; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double sk = size[k];
      d(k, keep) = ((sa + sk) * d(k, a) + (sb + sk) * d(k, b) - sk * dab) / (sa + sb + sk);
    }
    active[drop] = 0;
    size[keep] = sa + sb;
  }

  std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.height < y.height; });
  std::vector<std::size_t> parent(m);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (std::size_t k = 0; k + 1 < merges.size(); ++k) {
    parent[find_root(parent, merges[k].a)] = find_root(parent, merges[k].b);
  }
  const std::size_t root0 = find_root(parent, 0);
  std::vector<int> side(m);
  for (std::size_t i = 0; i < m; ++i) side[i] = find_root(parent, i) == root0 ? 0 : 1;
  return side;
}

bool all_identical(const Matrix& points) {
  for (Eigen::Index i = 1; i < points.rows(); ++i) {
    if (points.row(i) != points.row(0)) return false;
  }
  return true;
}

Vector side_centroid(const Matrix& points, const std::vector<int>& side, int which, std::size_t* count) {
  Vector c = Vector::Zero(points.cols());
  std::size_t n = 0;
  for (std::size_t i = 0; i < side.size(); ++i) {
    if (side[i] == which) {
      c += points.row(static_cast<Eigen::Index>(i)).transpose();
      ++n;
    }
  }
  if (count) *count = n;
  return n ? Vector(c / static_cast<double>(n)) : c;
}

Matrix take_rows(const Matrix& points, const std::vector<std::size_t>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), points.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = points.row(static_cast<Eigen::Index>(idx[k]));
  return out;
}

}  // namespace

LabelingConfig LabelingConfig::defaults_for(std::size_t n) {
  LabelingConfig cfg;
  cfg.n_min = std::max<std::size_t>(50, static_cast<std::size_t>(0.005 * static_cast<double>(n)));
  return cfg;
}

void LabelingConfig::validate() const {
  if (n_min < 1) throw ConfigError("labeling: n_min must be >= 1");
  if (!(rho > 0.0)) throw ConfigError("labeling: rho must be > 0");
  if (subsample_cap < 2) throw ConfigError("labeling: subsample_cap must be >= 2");
}

std::vector<int> ward_agglomerative_two(const Matrix& points) { return agglomerative_impl(points, true); }

std::vector<int> ward_agglomerative_two_serial(const Matrix& points) { return agglomerative_impl(points, false); }

std::vector<int> exact_ward_bipartition(const Matrix& points) {
  const auto m = static_cast<std::size_t>(points.rows());
  if (m < 2) throw ContractError("exact_ward_bipartition: need at least two points");
  if (m > 30) throw ContractError("exact_ward_bipartition: too many points for enumeration");
  const auto dims = points.cols();
  std::vector<double> sq(m);
  for (std::size_t i = 0; i < m; ++i) sq[i] = points.row(static_cast<Eigen::Index>(i)).squaredNorm();
  const double sq_total = std::accumulate(sq.begin(), sq.end(), 0.0);
  const Vector sum_total = points.colwise().sum().transpose();

  // Point m-1 always sits on side 0, so each bipartition is visited once.
  const std::uint64_t codes = std::uint64_t{1} << (m - 1);
  double best = std::numeric_limits<double>::infinity();
  std::uint64_t best_code = 1;
  Vector s1(dims);
  for (std::uint64_t code = 1; code < codes; ++code) {
    s1.setZero();
    double q1 = 0.0;
    std::size_t n1 = 0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      if (code >> i & 1U) {
        s1 += points.row(static_cast<Eigen::Index>(i)).transpose();
        q1 += sq[i];
        ++n1;
      }
    }
    const auto n0 = static_cast<double>(m - n1);
    const Vector s0 = sum_total - s1;
    const double wss = (q1 - s1.squaredNorm() / static_cast<double>(n1)) + ((sq_total - q1) - s0.squaredNorm() / n0);
    if (wss < best) {
      best = wss;
      best_code = code;
    }
  }
  std::vector<int> side(m, 0);
  for (std::size_t i = 0; i + 1 < m; ++i) side[i] = (best_code >> i & 1U) ? 1 : 0;
  if (side[0] == 1) {
    for (auto& s : side) s = 1 - s;
  }
  return side;
}

double within_sum_of_squares(const Matrix& points, const std::vector<int>& side) {
  double total = 0.0;
  for (int which : {0, 1}) {
    const Vector c = side_centroid(points, side, which, nullptr);
    for (std::size_t i = 0; i < side.size(); ++i) {
      if (side[i] == which) total += (points.row(static_cast<Eigen::Index>(i)).transpose() - c).squaredNorm();
    }
  }
  return total;
}

std::optional<Bisection> ward_bisect(const Matrix& points, const LabelingConfig& cfg, std::uint64_t seed) {
  const auto m = static_cast<std::size_t>(points.rows());
  if (m < 2) throw ContractError("ward_bisect: need at least two points, got " + std::to_string(m));
  if (all_identical(points)) return std::nullopt;

  Bisection out;
  if (m <= cfg.exact_max) {
    out.side = exact_ward_bipartition(points);
  } else if (m <= cfg.subsample_cap) {
    out.side = ward_agglomerative_two(points);
  } else {
    std::vector<std::size_t> pool(m);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(cfg.subsample_cap);
    std::sort(pool.begin(), pool.end());
    const Matrix sub = take_rows(points, pool);
    const std::vector<int> sub_side =
        pool.size() <= cfg.exact_max ? exact_ward_bipartition(sub) : ward_agglomerative_two(sub);
    const Vector c0 = side_centroid(sub, sub_side, 0, nullptr);
    const Vector c1 = side_centroid(sub, sub_side, 1, nullptr);
    out.side.assign(m, -1);
    for (std::size_t k = 0; k < pool.size(); ++k) out.side[pool[k]] = sub_side[k];
    const auto sm = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < sm; ++i) {
      auto& s = out.side[static_cast<std::size_t>(i)];
      if (s >= 0) continue;
      const double d0 = (points.row(i).transpose() - c0).squaredNorm();
      const double d1 = (points.row(i).transpose() - c1).squaredNorm();
      s = d1 < d0 ? 1 : 0;
    }
  }
  out.centroid0 = side_centroid(points, out.side, 0, &out.size0);
  out.centroid1 = side_centroid(points, out.side, 1, &out.size1);
  return out;
}

ClusterAssignment label_points(const Matrix& points, const LabelingConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(points.rows());
  if (n < cfg.n_min) {
    throw ContractError("label_latent: " + std::to_string(n) + " points < n_min " + std::to_string(cfg.n_min));
  }
  ClusterAssignment asg;
  std::vector<std::vector<std::size_t>> finals;
  std::deque<std::vector<std::size_t>> pending;
  pending.emplace_back(n);
  std::iota(pending.front().begin(), pending.front().end(), std::size_t{0});

  std::uint64_t bisections = 0;
  while (!pending.empty()) {
    std::vector<std::size_t> item = std::move(pending.front());
    pending.pop_front();
    if (item.size() < 2) {
      finals.push_back(std::move(item));
      continue;
    }
    auto bis = ward_bisect(take_rows(points, item), cfg, derive_seed(cfg.seed, bisections++));
    if (!bis) {
      finals.push_back(std::move(item));
      continue;
    }
    const double dist = (bis->centroid0 - bis->centroid1).norm();
    if (bis->size0 > cfg.n_min && bis->size1 > cfg.n_min && dist > cfg.rho) {
      asg.accepted_splits.push_back({bis->size0, bis->size1, dist});
      std::vector<std::size_t> half0, half1;
      for (std::size_t k = 0; k < item.size(); ++k) (bis->side[k] == 0 ? half0 : half1).push_back(item[k]);
      pending.push_back(std::move(half0));
      pending.push_back(std::move(half1));
    } else {
      finals.push_back(std::move(item));
    }
  }

  std::stable_sort(finals.begin(), finals.end(), [](const auto& x, const auto& y) {
    if (x.size() != y.size()) return x.size() > y.size();
    return x.front() < y.front();
  });
  asg.labels.assign(n, 0);
  asg.centroids = Matrix::Zero(static_cast<Eigen::Index>(finals.size()), points.cols());
  for (std::size_t c = 0; c < finals.size(); ++c) {
    for (auto i : finals[c]) {
      asg.labels[i] = static_cast<int>(c + 1);
      asg.centroids.row(static_cast<Eigen::Index>(c)) += points.row(static_cast<Eigen::Index>(i));
    }
    asg.centroids.row(static_cast<Eigen::Index>(c)) /= static_cast<double>(finals[c].size());
    asg.sizes.push_back(finals[c].size());
  }
  return asg;
}

ClusterAssignment label_latent(const LatentEmbedding& emb, const LabelingConfig& cfg) {
  return label_points(emb.points, cfg);
}

std::vector<int> assign_new(const ClusterAssignment& asg, const Matrix& new_points) {
  if (asg.cluster_count() == 0) throw ContractError("assign_new: empty assignment");
  if (new_points.cols() != asg.centroids.cols()) throw ContractError("assign_new: dimension mismatch");
  std::vector<int> out(static_cast<std::size_t>(new_points.rows()));
  const auto n = static_cast<std::ptrdiff_t>(new_points.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int label = 1;
    for (Eigen::Index c = 0; c < asg.centroids.rows(); ++c) {
      const double d = (new_points.row(i) - asg.centroids.row(c)).squaredNorm();
      if (d < best) {
        best = d;
        label = static_cast<int>(c + 1);
      }
    }
    out[static_cast<std::size_t>(i)] = label;
  }
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw ContractError("adjusted_rand_index: length mismatch");
  auto pairs = [](double x) { return x * (x - 1.0) / 2.0; };
  std::map<std::pair<int, int>, double> joint;
  std::map<int, double> ra, rb;
  for (std::size_t i = 0; i < a.size(); ++i) {
    joint[{a[i], b[i]}] += 1.0;
    ra[a[i]] += 1.0;
    rb[b[i]] += 1.0;
  }
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [_, v] : joint) index += pairs(v);
  for (const auto& [_, v] : ra) sa += pairs(v);
  for (const auto& [_, v] : rb) sb += pairs(v);
  const double total = pairs(static_cast<double>(a.size()));
  const double expected = total > 0.0 ? sa * sb / total : 0.0;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

void write_assignment_csv(const ClusterAssignment& asg, const std::vector<std::size_t>& row_index,
                          const std::filesystem::path& path) {
  if (row_index.size() != asg.labels.size()) throw ContractError("write_assignment_csv: length mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "row_id,cluster\n";
  for (std::size_t i = 0; i < row_index.size(); ++i) out << row_index[i] << ',' << asg.labels[i] << '\n';
}

nlohmann::json assignment_summary(const ClusterAssignment& asg, const LabelingConfig& cfg) {
  nlohmann::json clusters = nlohmann::json::array();
  for (std::size_t c = 0; c < asg.cluster_count(); ++c) {
    std::vector<std::string> centroid;
    for (Eigen::Index j = 0; j < asg.centroids.cols(); ++j) {
      centroid.push_back(format_double(asg.centroids(static_cast<Eigen::Index>(c), j)));
    }
    clusters.push_back({{"cluster", c + 1}, {"size", asg.sizes[c]}, {"centroid", centroid}});
  }
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : asg.accepted_splits) {
    splits.push_back({{"size0", s.size0}, {"size1", s.size1}, {"centroid_distance", format_double(s.centroid_distance)}});
  }
  return {{"clusters", clusters},
          {"accepted_splits", splits},
          {"config",
           {{"n_min", cfg.n_min},
            {"rho", format_double(cfg.rho)},
            {"subsample_cap", cfg.subsample_cap},
            {"exact_max", cfg.exact_max},
            {"seed", cfg.seed}}}};
}

std::vector<std::pair<std::size_t, int>> read_assignment_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (split_csv_line(line) != std::vector<std::string>{"row_id", "cluster"}) {
    throw LoadError(path.string() + ": malformed assignment header");
  }
  std::vector<std::pair<std::size_t, int>> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 2) throw LoadError(path.string() + ": malformed assignment row");
    out.emplace_back(static_cast<std::size_t>(std::stoull(f[0])), std::stoi(f[1]));
  }
  return out;
}

}  // namespace creditvae
