#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace creditvae {

/// Dense row-major matrix used for every n x d table in the pipeline.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LoadError : public Error {
 public:
  using Error::Error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class FitError : public Error {
 public:
  using Error::Error;
};
class TransformError : public Error {
 public:
  using Error::Error;
};
class ContractError : public Error {
 public:
  using Error::Error;
};
class TrainError : public Error {
 public:
  using Error::Error;
};
class StageError : public Error {
 public:
  using Error::Error;
};

// splitmix64 finalizer; used to derive independent seeds from a master seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return mix_seed(master ^ mix_seed(stream + 1));
}

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

/// 17 significant digits, fixed width of precision regardless of value.
std::string format_double17(double v);

/// Strict full-string parse; throws ContractError on failure. Accepts inf/-inf/nan.
double parse_double(std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace creditvae
