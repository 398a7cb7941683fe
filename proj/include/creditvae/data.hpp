#pragma once

#include "creditvae/common.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace creditvae {

enum class FeatureKind { numeric, categorical };

struct FeatureSchema {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  bool allows_missing = true;
};

/// Missing cell. Kept as its own variant so WoE can route it to a Missing bin.
struct Missing {
  bool operator==(const Missing&) const = default;
};

using Cell = std::variant<Missing, double, std::string>;

inline bool is_missing(const Cell& c) { return std::holds_alternative<Missing>(c); }

/// Rows of mixed cells plus a binary label (1 = 90+ days past due).
class Dataset {
 public:
  Dataset() = default;
  /// Validates arity, per-column kinds, missing permission and label values.
  Dataset(std::vector<FeatureSchema> schema, std::vector<std::vector<Cell>> rows,
          std::vector<int> labels);

  const std::vector<FeatureSchema>& schema() const { return schema_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }
  const std::vector<int>& labels() const { return labels_; }

  std::size_t size() const { return rows_.size(); }
  std::size_t dims() const { return schema_.size(); }
  const Cell& cell(std::size_t row, std::size_t col) const { return rows_[row][col]; }
  int label(std::size_t row) const { return labels_[row]; }

  /// Column index by name; throws ContractError if absent.
  std::size_t column(const std::string& name) const;

  /// Row subset in the given order.
  Dataset subset(const std::vector<std::size_t>& indices) const;

 private:
  std::vector<FeatureSchema> schema_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<int> labels_;
};

struct SchemaFile {
  std::vector<FeatureSchema> features;
  std::string label_column;
};

SchemaFile schema_from_json(const nlohmann::json& j);
nlohmann::json schema_to_json(const SchemaFile& s);
SchemaFile load_schema(const std::filesystem::path& path);
void save_schema(const SchemaFile& s, const std::filesystem::path& path);

/// Parses a comma-separated file with one header line. Empty cells and
/// `missing_token` become Missing. Errors name the 1-based file line.
Dataset load_csv(const std::filesystem::path& path, const std::vector<FeatureSchema>& schema,
                 const std::string& label_column, const std::string& missing_token = "");

void write_csv(const Dataset& ds, const std::filesystem::path& path,
               const std::string& label_column, const std::string& missing_token = "");

/// Split one CSV record. Handles double-quoted fields with "" escapes.
std::vector<std::string> split_csv_line(const std::string& line);

struct SplitPlan {
  std::vector<std::size_t> train_indices;  // sorted, all label 0
  std::vector<std::size_t> eval_indices;   // sorted
  std::uint64_t seed = 0;
};

/// Uniform sample of floor(fraction * #majority) label-0 rows for training;
/// every other row goes to evaluation.
SplitPlan split_majority(const Dataset& ds, double train_fraction, std::uint64_t seed);

nlohmann::json split_to_json(const SplitPlan& plan);
SplitPlan split_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Synthetic portfolios

struct FeatureGenerator {
  std::string name;
  FeatureKind kind = FeatureKind::numeric;
  double mean = 0.0;
  double variance = 1.0;
  std::vector<std::string> categories;
  std::vector<double> probabilities;
  double missing_rate = 0.0;
};

struct Segment {
  double weight = 1.0;
  double default_probability = 0.0;
  std::vector<FeatureGenerator> features;
};

/// Draws n rows from the segment mixture. All segments must declare the same
/// features in the same order; weights must sum to 1 within 1e-9.
Dataset synth_generate(const std::vector<Segment>& segments, std::size_t n, std::uint64_t seed);

/// Same draw, also returning the generating segment of each row.
Dataset synth_generate(const std::vector<Segment>& segments, std::size_t n, std::uint64_t seed,
                       std::vector<int>* segment_of_row);

std::vector<Segment> segments_from_json(const nlohmann::json& j);

}  // namespace creditvae
