#pragma once

#include "creditvae/common.hpp"
#include "creditvae/vae.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

namespace creditvae {

/// Per-customer posterior moments in latent space.
struct LatentEmbedding {
  Matrix points;    // n x d_z, posterior means
  Matrix log_vars;  // n x d_z
  std::vector<std::size_t> row_index;  // embedding row -> dataset row

  std::size_t size() const { return row_index.size(); }
  std::size_t latent_dim() const { return static_cast<std::size_t>(points.cols()); }
};

/// Row i holds encode(p, data.row(i)). `row_index` defaults to 0..n-1.
LatentEmbedding embed_mean(const VaeParams& p, const Matrix& data, std::vector<std::size_t> row_index = {});
LatentEmbedding embed_mean_serial(const VaeParams& p, const Matrix& data, std::vector<std::size_t> row_index = {});

/// Noise for (row, sample, latent coordinate).
using NoiseFn = std::function<double(std::size_t row, std::size_t sample, std::size_t dim)>;

/// Row i is the mean of `samples` reparametrized draws. Each row uses its own
/// stream derived from (seed, row) so output is independent of threading.
LatentEmbedding embed_mc(const VaeParams& p, const Matrix& data, std::size_t samples, std::uint64_t seed,
                         std::vector<std::size_t> row_index = {});
LatentEmbedding embed_mc(const VaeParams& p, const Matrix& data, std::size_t samples, const NoiseFn& noise,
                         std::vector<std::size_t> row_index = {});

/// CSV: row_id, z1..z_dz, logvar1..logvar_dz
void write_embedding_csv(const LatentEmbedding& emb, const std::filesystem::path& path);
LatentEmbedding read_embedding_csv(const std::filesystem::path& path);

}  // namespace creditvae
