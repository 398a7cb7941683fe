#pragma once

#include "creditvae/common.hpp"
#include "creditvae/data.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace creditvae {

/// One Weight-of-Evidence bin. Numeric bins cover [lower, upper).
struct Bin {
  enum class Kind { interval, categories, missing };

  Kind kind = Kind::interval;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  std::vector<std::string> categories;
  std::int64_t goods = 0;
  std::int64_t bads = 0;
  double woe = 0.0;

  std::int64_t count() const { return goods + bads; }
  double bad_rate() const { return count() == 0 ? 0.0 : static_cast<double>(bads) / static_cast<double>(count()); }
  bool is_missing() const { return kind == Kind::missing; }
};

/// Binning of a single feature. The Missing bin, when present, sits first.
struct BinSpec {
  std::string feature;
  FeatureKind kind = FeatureKind::numeric;
  std::vector<Bin> bins;
  /// Categorical only: bin that absorbs unseen categories.
  std::optional<std::size_t> fallback;

  std::int64_t total_goods() const;
  std::int64_t total_bads() const;
  std::int64_t total_count() const { return total_goods() + total_bads(); }

  /// Bin index for a cell, or nullopt when no bin accepts it.
  std::optional<std::size_t> locate(const Cell& cell) const;
};

/// log((goods/G) / (bads/B)); switches to +0.5 smoothing over `bin_count`
/// bins when either count is zero.
double woe_value(std::int64_t goods, std::int64_t bads, std::int64_t total_goods, std::int64_t total_bads,
                 std::size_t bin_count);

/// Refills every bin's woe from its own counts and the feature totals.
void compute_woe(BinSpec& spec);

/// Equal-frequency fine classing into at most k interval bins (numeric) or
/// one bin per observed category (categorical), plus a Missing bin when the
/// feature has missing cells.
BinSpec fit_fine_bins(const Dataset& ds, const std::string& feature, std::size_t k);

struct MergeEvent {
  double left_bad_rate;
  double right_bad_rate;
  double merged_bad_rate;
};

/// Greedy coarse classing: repeatedly merges the adjacent non-missing pair
/// with the smallest absolute bad-rate difference until there are at most
/// `max_bins` non-missing bins and each holds >= min_share of all rows.
BinSpec coarse_merge(const BinSpec& spec, std::size_t max_bins, double min_share,
                     std::vector<MergeEvent>* trace = nullptr);

/// Analyst-style coarse classing: merges consecutive non-missing bins in runs
/// of the given lengths (which must sum to the non-missing bin count).
BinSpec merge_runs(const BinSpec& spec, const std::vector<std::size_t>& run_lengths);

struct WoeTable {
  std::vector<BinSpec> features;
  std::int64_t total_goods = 0;
  std::int64_t total_bads = 0;
};

WoeTable woe_fit(const Dataset& ds, std::size_t k, bool coarse, std::size_t max_bins = 5,
                 double min_share = 0.05);

enum class TransformKind { woe_coarse, woe_fine, pca_full, standardize, raw };

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& s);

struct TransformOptions {
  TransformKind kind = TransformKind::woe_coarse;
  std::size_t fine_bins = 20;
  std::size_t max_bins = 5;
  double min_share = 0.05;
};

/// Numeric column of the raw encoding. Categorical features expand one-hot.
struct RawColumn {
  std::size_t feature = 0;
  std::optional<std::string> category;
  double missing_fill = 0.0;
};

struct TransformSpec {
  TransformKind kind = TransformKind::woe_coarse;
  std::vector<FeatureSchema> schema;
  std::vector<std::string> output_names;

  std::optional<WoeTable> woe;

  std::vector<RawColumn> raw_columns;
  Vector center;      // standardize / pca
  Vector scale;       // standardize
  Matrix components;  // pca, one component per column

  Vector col_min;
  Vector col_max;
  std::vector<bool> constant;

  std::size_t output_dim() const { return output_names.size(); }
};

TransformSpec fit_transform(const Dataset& ds, const TransformOptions& options);

/// Transformed features before the [0,1] rescale (WoE values, z-scores, ...).
Matrix apply_unscaled(const TransformSpec& spec, const Dataset& ds);
Matrix apply_unscaled_serial(const TransformSpec& spec, const Dataset& ds);

/// Per-column min/max rescale to [0,1] with training extrema, clipped.
Matrix rescale(const TransformSpec& spec, const Matrix& unscaled);

/// apply_unscaled followed by rescale.
Matrix apply_transform(const TransformSpec& spec, const Dataset& ds);

nlohmann::json to_json(const BinSpec& spec);
BinSpec bin_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TransformSpec& spec);
TransformSpec transform_spec_from_json(const nlohmann::json& j);

}  // namespace creditvae
