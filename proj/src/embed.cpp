#include "creditvae/embed.hpp"

#include "creditvae/data.hpp"

#include <fstream>
#include <numeric>
#include <random>

namespace creditvae {

namespace {

std::vector<std::size_t> default_index(std::vector<std::size_t> idx, Eigen::Index n) {
  if (idx.empty()) {
    idx.resize(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
  }
  if (idx.size() != static_cast<std::size_t>(n)) throw ContractError("embed: row_index length != rows");
  return idx;
}

void check_width(const VaeParams& p, const Matrix& data) {
  if (static_cast<std::size_t>(data.cols()) != p.arch.input_dim) {
    throw ContractError("embed: data has " + std::to_string(data.cols()) + " columns, model expects " +
                        std::to_string(p.arch.input_dim));
  }
}

LatentEmbedding mean_impl(const VaeParams& p, const Matrix& data, std::vector<std::size_t> row_index, bool parallel) {
  check_width(p, data);
  LatentEmbedding emb;
  emb.row_index = default_index(std::move(row_index), data.rows());
  const auto dz = static_cast<Eigen::Index>(p.arch.latent_dim);
  emb.points.resize(data.rows(), dz);
  emb.log_vars.resize(data.rows(), dz);
  const auto n = static_cast<std::ptrdiff_t>(data.rows());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Vector x = data.row(i).transpose();
    EncodedMoments m = encode(p, x);
    emb.points.row(i) = m.mu.transpose();
    emb.log_vars.row(i) = m.log_var.transpose();
  }
  return emb;
}

}  // namespace

LatentEmbedding embed_mean(const VaeParams& p, const Matrix& data, std::vector<std::size_t> row_index) {
  return mean_impl(p, data, std::move(row_index), true);
}

LatentEmbedding embed_mean_serial(const VaeParams& p, const Matrix& data, std::vector<std::size_t> row_index) {
  return mean_impl(p, data, std::move(row_index), false);
}

LatentEmbedding embed_mc(const VaeParams& p, const Matrix& data, std::size_t samples, const NoiseFn& noise,
                         std::vector<std::size_t> row_index) {
  if (samples < 1) throw ContractError("embed_mc: samples must be >= 1");
  LatentEmbedding emb = mean_impl(p, data, std::move(row_index), true);
  const auto dz = emb.points.cols();
  const auto n = static_cast<std::ptrdiff_t>(data.rows());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    EncodedMoments m{emb.points.row(i).transpose(), emb.log_vars.row(i).transpose()};
    Vector acc = Vector::Zero(dz);
    Vector eps(dz);
    for (std::size_t s = 0; s < samples; ++s) {
      for (Eigen::Index j = 0; j < dz; ++j) {
        eps[j] = noise(static_cast<std::size_t>(i), s, static_cast<std::size_t>(j));
      }
      acc += reparametrize(m, eps);
    }
    emb.points.row(i) = (acc / static_cast<double>(samples)).transpose();
  }
  return emb;
}

LatentEmbedding embed_mc(const VaeParams& p, const Matrix& data, std::size_t samples, std::uint64_t seed,
                         std::vector<std::size_t> row_index) {
  if (samples < 1) throw ContractError("embed_mc: samples must be >= 1");
  const auto dz = p.arch.latent_dim;
  const auto n = static_cast<std::size_t>(data.rows());
  // Pre-draw per-row streams so the noise function is a pure lookup.
  std::vector<double> draws(n * samples * dz);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    std::normal_distribution<double> normal(0.0, 1.0);
    double* out = draws.data() + static_cast<std::size_t>(i) * samples * dz;
    for (std::size_t k = 0; k < samples * dz; ++k) out[k] = normal(rng);
  }
  NoiseFn lookup = [&](std::size_t row, std::size_t s, std::size_t j) {
    return draws[(row * samples + s) * dz + j];
  };
  return embed_mc(p, data, samples, lookup, std::move(row_index));
}

void write_embedding_csv(const LatentEmbedding& emb, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto dz = emb.points.cols();
  out << "row_id";
  for (Eigen::Index j = 0; j < dz; ++j) out << ",z" << j + 1;
  for (Eigen::Index j = 0; j < dz; ++j) out << ",logvar" << j + 1;
  out << '\n';
  for (std::size_t i = 0; i < emb.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << emb.row_index[i];
    for (Eigen::Index j = 0; j < dz; ++j) out << ',' << format_double(emb.points(r, j));
    for (Eigen::Index j = 0; j < dz; ++j) out << ',' << format_double(emb.log_vars(r, j));
    out << '\n';
  }
}

LatentEmbedding read_embedding_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError(path.string() + ": empty embedding file");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "row_id" || header.size() % 2 != 1) {
    throw LoadError(path.string() + ": malformed embedding header");
  }
  const std::size_t dz = (header.size() - 1) / 2;
  std::vector<std::vector<double>> rows;
  LatentEmbedding emb;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != header.size()) throw LoadError(path.string() + ": row " + std::to_string(line_no) + " arity");
    try {
      emb.row_index.push_back(static_cast<std::size_t>(std::stoull(f[0])));
      std::vector<double> vals;
      for (std::size_t k = 1; k < f.size(); ++k) vals.push_back(parse_double(f[k]));
      rows.push_back(std::move(vals));
    } catch (const std::exception& e) {
      throw LoadError(path.string() + ": row " + std::to_string(line_no) + ": " + e.what());
    }
  }
  emb.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dz));
  emb.log_vars.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(dz));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < dz; ++j) {
      emb.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      emb.log_vars(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][dz + j];
    }
  }
  return emb;
}

}  // namespace creditvae
