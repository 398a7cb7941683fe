#pragma once

#include "creditvae/analyze.hpp"
#include "creditvae/cluster.hpp"
#include "creditvae/data.hpp"
#include "creditvae/transform.hpp"
#include "creditvae/vae.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace creditvae {

/// Stage indices mixed into the master seed.
enum class Stage : std::uint64_t { synth = 1, split = 2, train = 3, embed = 4, label = 5 };

std::uint64_t stage_seed(std::uint64_t master, Stage stage);

struct SynthSettings {
  std::vector<Segment> segments;
  std::size_t n = 0;
};

struct PipelineConfig {
  std::filesystem::path dataset;
  std::filesystem::path schema;
  std::string missing_token;

  TransformOptions transform;
  double train_fraction = 0.3;

  std::string preset = "arch4";
  std::optional<Architecture> architecture;  // input_dim is taken from the transform
  std::optional<std::size_t> epochs;
  std::size_t batch_size = 100;
  double adagrad_epsilon = 1e-8;
  double momentum = 0.001;
  std::size_t log_every = 10;

  std::string embed_mode = "mean";  // mean | mc
  std::size_t mc_samples = 100;

  std::optional<std::size_t> n_min;
  double rho = 0.25;
  std::size_t subsample_cap = 2000;
  std::size_t exact_max = 16;

  SalientConfig salient;
  std::string salient_space = "transformed";  // transformed | raw
  LogisticConfig pd;

  std::optional<SynthSettings> synth;

  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 42;

  nlohmann::json source;  // effective config, used for the provenance hash

  /// Relative paths resolve against `base_dir`.
  static PipelineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
  static PipelineConfig load(const std::filesystem::path& path);

  void set_seed(std::uint64_t s);
  void set_output_dir(const std::filesystem::path& dir);

  /// Hex FNV-1a of the effective config without its output directory.
  std::string hash() const;
};

/// Artifact file names inside the output directory.
namespace artifacts {
inline constexpr const char* transform_spec = "transform.json";
inline constexpr const char* split = "split.json";
inline constexpr const char* matrix = "matrix.csv";
inline constexpr const char* params = "params.json";
inline constexpr const char* history = "history.csv";
inline constexpr const char* embedding = "embedding.csv";
inline constexpr const char* assignment = "assignment.csv";
inline constexpr const char* clusters = "clusters.json";
inline constexpr const char* report = "report.json";
}  // namespace artifacts

void cmd_synth(const PipelineConfig& cfg, std::ostream& log);
void cmd_transform(const PipelineConfig& cfg, std::ostream& log);
void cmd_train(const PipelineConfig& cfg, std::ostream& log);
void cmd_embed(const PipelineConfig& cfg, std::ostream& log);
void cmd_label(const PipelineConfig& cfg, std::ostream& log);
void cmd_report(const PipelineConfig& cfg, std::ostream& log);
void cmd_all(const PipelineConfig& cfg, std::ostream& log);

/// Row-id prefixed numeric matrix file.
void write_matrix_csv(const Matrix& m, const std::vector<std::string>& names, const std::filesystem::path& path);
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace creditvae
