#include "creditvae/transform.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace creditvae {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Bin merge_pair(const Bin& a, const Bin& b) {
  Bin m = a;
  if (a.kind == Bin::Kind::interval) {
    m.lower = std::min(a.lower, b.lower);
    m.upper = std::max(a.upper, b.upper);
  } else {
    m.categories.insert(m.categories.end(), b.categories.begin(), b.categories.end());
  }
  m.goods = a.goods + b.goods;
  m.bads = a.bads + b.bads;
  return m;
}

// Splits a spec into (missing bin, non-missing bins) and rebuilds it.
struct Parts {
  std::optional<Bin> missing;
  std::vector<Bin> regular;
  std::optional<std::size_t> fallback;  // index into regular
};

Parts split_parts(const BinSpec& spec) {
  Parts p;
  for (std::size_t i = 0; i < spec.bins.size(); ++i) {
    const auto& b = spec.bins[i];
    if (b.is_missing()) {
      p.missing = b;
    } else {
      if (spec.fallback && *spec.fallback == i) p.fallback = p.regular.size();
      p.regular.push_back(b);
    }
  }
  return p;
}

BinSpec join_parts(const BinSpec& like, Parts p) {
  BinSpec out;
  out.feature = like.feature;
  out.kind = like.kind;
  std::size_t offset = 0;
  if (p.missing) {
    out.bins.push_back(*p.missing);
    offset = 1;
  }
  for (auto& b : p.regular) out.bins.push_back(std::move(b));
  if (p.fallback) out.fallback = *p.fallback + offset;
  compute_woe(out);
  return out;
}

std::string bound_text(double v) { return format_double(v); }

}  // namespace

std::int64_t BinSpec::total_goods() const {
  std::int64_t s = 0;
  for (const auto& b : bins) s += b.goods;
  return s;
}

std::int64_t BinSpec::total_bads() const {
  std::int64_t s = 0;
  for (const auto& b : bins) s += b.bads;
  return s;
}

std::optional<std::size_t> BinSpec::locate(const Cell& cell) const {
  if (is_missing(cell)) {
    for (std::size_t i = 0; i < bins.size(); ++i) {
      if (bins[i].is_missing()) return i;
    }
    if (kind == FeatureKind::categorical) return fallback;
    return std::nullopt;
  }
  if (kind == FeatureKind::numeric) {
    const double v = std::get<double>(cell);
    for (std::size_t i = 0; i < bins.size(); ++i) {
      const auto& b = bins[i];
      if (b.kind == Bin::Kind::interval && v >= b.lower && v < b.upper) return i;
    }
    return std::nullopt;
  }
  const auto& token = std::get<std::string>(cell);
  for (std::size_t i = 0; i < bins.size(); ++i) {
    const auto& cats = bins[i].categories;
    if (std::find(cats.begin(), cats.end(), token) != cats.end()) return i;
  }
  return fallback;
}

double woe_value(std::int64_t goods, std::int64_t bads, std::int64_t total_goods, std::int64_t total_bads,
                 std::size_t bin_count) {
  if (goods > 0 && bads > 0) {
    return std::log((static_cast<double>(goods) / static_cast<double>(total_goods)) /
                    (static_cast<double>(bads) / static_cast<double>(total_bads)));
  }
  const double half_k = 0.5 * static_cast<double>(bin_count);
  const double g = (static_cast<double>(goods) + 0.5) / (static_cast<double>(total_goods) + half_k);
  const double b = (static_cast<double>(bads) + 0.5) / (static_cast<double>(total_bads) + half_k);
  return std::log(g / b);
}

void compute_woe(BinSpec& spec) {
  const auto G = spec.total_goods();
  const auto B = spec.total_bads();
  for (auto& b : spec.bins) b.woe = woe_value(b.goods, b.bads, G, B, spec.bins.size());
}

BinSpec fit_fine_bins(const Dataset& ds, const std::string& feature, std::size_t k) {
  if (k < 2) throw ContractError("fit_fine_bins: k must be >= 2");
  const std::size_t col = ds.column(feature);
  BinSpec spec;
  spec.feature = feature;
  spec.kind = ds.schema()[col].kind;

  Bin missing;
  missing.kind = Bin::Kind::missing;
  bool has_missing = false;

  if (spec.kind == FeatureKind::numeric) {
    std::vector<double> values;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (!is_missing(ds.cell(i, col))) values.push_back(std::get<double>(ds.cell(i, col)));
    }
    std::sort(values.begin(), values.end());
    std::vector<double> cuts;
    for (std::size_t q = 1; q < k && !values.empty(); ++q) {
      const double c = values[q * values.size() / k];
      if (c > values.front() && (cuts.empty() || c > cuts.back())) cuts.push_back(c);
    }
    std::vector<Bin> intervals(cuts.size() + 1);
    for (std::size_t b = 0; b < intervals.size(); ++b) {
      intervals[b].lower = b == 0 ? -kInf : cuts[b - 1];
      intervals[b].upper = b == cuts.size() ? kInf : cuts[b];
    }
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Cell& c = ds.cell(i, col);
      Bin* target = &missing;
      if (!is_missing(c)) {
        const double v = std::get<double>(c);
        auto it = std::upper_bound(cuts.begin(), cuts.end(), v);
        target = &intervals[static_cast<std::size_t>(it - cuts.begin())];
      } else {
        has_missing = true;
      }
      (ds.label(i) ? target->bads : target->goods) += 1;
    }
    if (has_missing) spec.bins.push_back(missing);
    for (auto& b : intervals) spec.bins.push_back(std::move(b));
  } else {
    std::map<std::string, Bin> by_cat;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const Cell& c = ds.cell(i, col);
      Bin* target = &missing;
      if (!is_missing(c)) {
        const auto& tok = std::get<std::string>(c);
        auto [it, inserted] = by_cat.try_emplace(tok);
        if (inserted) {
          it->second.kind = Bin::Kind::categories;
          it->second.categories = {tok};
        }
        target = &it->second;
      } else {
        has_missing = true;
      }
      (ds.label(i) ? target->bads : target->goods) += 1;
    }
    std::vector<Bin> cats;
    for (auto& [_, b] : by_cat) cats.push_back(std::move(b));
    // Order by risk so that "adjacent" is meaningful for coarse merging.
    std::stable_sort(cats.begin(), cats.end(),
                     [](const Bin& a, const Bin& b) { return a.bad_rate() < b.bad_rate(); });
    if (has_missing) spec.bins.push_back(missing);
    const std::size_t offset = spec.bins.size();
    std::size_t best = 0;
    for (std::size_t i = 0; i < cats.size(); ++i) {
      if (cats[i].count() > cats[best].count()) best = i;
    }
    if (!cats.empty()) spec.fallback = offset + best;
    for (auto& b : cats) spec.bins.push_back(std::move(b));
  }
  compute_woe(spec);
  return spec;
}

BinSpec coarse_merge(const BinSpec& spec, std::size_t max_bins, double min_share,
                     std::vector<MergeEvent>* trace) {
  Parts p = split_parts(spec);
  const double total = static_cast<double>(spec.total_count());
  auto too_small = [&](const Bin& b) {
    return total > 0.0 && static_cast<double>(b.count()) / total < min_share;
  };
  while (p.regular.size() > 1) {
    const bool over = p.regular.size() > std::max<std::size_t>(max_bins, 1);
    const bool small = std::any_of(p.regular.begin(), p.regular.end(), too_small);
    if (!over && !small) break;
    std::size_t best = 0;
    double best_diff = kInf;
    for (std::size_t i = 0; i + 1 < p.regular.size(); ++i) {
      const double d = std::abs(p.regular[i].bad_rate() - p.regular[i + 1].bad_rate());
      if (d < best_diff) {
        best_diff = d;
        best = i;
      }
    }
    Bin merged = merge_pair(p.regular[best], p.regular[best + 1]);
    if (trace) trace->push_back({p.regular[best].bad_rate(), p.regular[best + 1].bad_rate(), merged.bad_rate()});
    p.regular[best] = std::move(merged);
    p.regular.erase(p.regular.begin() + static_cast<std::ptrdiff_t>(best) + 1);
    if (p.fallback && *p.fallback > best) --*p.fallback;
  }
  return join_parts(spec, std::move(p));
}

BinSpec merge_runs(const BinSpec& spec, const std::vector<std::size_t>& run_lengths) {
  Parts p = split_parts(spec);
  const std::size_t sum = std::accumulate(run_lengths.begin(), run_lengths.end(), std::size_t{0});
  if (sum != p.regular.size() ||
      std::any_of(run_lengths.begin(), run_lengths.end(), [](std::size_t r) { return r == 0; })) {
    throw ContractError("merge_runs: run lengths must be positive and sum to " +
                        std::to_string(p.regular.size()));
  }
  std::vector<Bin> merged;
  std::optional<std::size_t> fallback;
  std::size_t pos = 0;
  for (auto len : run_lengths) {
    Bin acc = p.regular[pos];
    for (std::size_t i = 1; i < len; ++i) acc = merge_pair(acc, p.regular[pos + i]);
    if (p.fallback && *p.fallback >= pos && *p.fallback < pos + len) fallback = merged.size();
    merged.push_back(std::move(acc));
    pos += len;
  }
  p.regular = std::move(merged);
  p.fallback = fallback;
  return join_parts(spec, std::move(p));
}

WoeTable woe_fit(const Dataset& ds, std::size_t k, bool coarse, std::size_t max_bins, double min_share) {
  WoeTable table;
  for (auto y : ds.labels()) (y ? table.total_bads : table.total_goods) += 1;
  if (table.total_bads == 0 || table.total_goods == 0) {
    throw FitError("woe_fit: degenerate labels (need both goods and bads)");
  }
  for (const auto& f : ds.schema()) {
    BinSpec s = fit_fine_bins(ds, f.name, k);
    if (coarse) s = coarse_merge(s, max_bins, min_share);
    table.features.push_back(std::move(s));
  }
  return table;
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::woe_coarse: return "woe_coarse";
    case TransformKind::woe_fine: return "woe_fine";
    case TransformKind::pca_full: return "pca_full";
    case TransformKind::standardize: return "standardize";
    case TransformKind::raw: return "raw";
  }
  return "unknown";
}

TransformKind transform_kind_from_string(const std::string& s) {
  for (auto k : {TransformKind::woe_coarse, TransformKind::woe_fine, TransformKind::pca_full,
                 TransformKind::standardize, TransformKind::raw}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown transform kind '" + s + "'");
}

namespace {

bool is_woe(TransformKind k) { return k == TransformKind::woe_coarse || k == TransformKind::woe_fine; }

// Maps one dataset row to the pre-rescale output row.
void encode_row(const TransformSpec& spec, const std::vector<Cell>& row, double* out, double* scratch) {
  if (is_woe(spec.kind)) {
    const auto& feats = spec.woe->features;
    for (std::size_t j = 0; j < feats.size(); ++j) {
      auto idx = feats[j].locate(row[j]);
      if (!idx) {
        std::string token = is_missing(row[j]) ? std::string("<missing>")
                            : std::holds_alternative<std::string>(row[j]) ? std::get<std::string>(row[j])
                                                                          : format_double(std::get<double>(row[j]));
        throw TransformError("feature '" + feats[j].feature + "': no bin for '" + token + "'");
      }
      out[j] = feats[j].bins[*idx].woe;
    }
    return;
  }
  const std::size_t p = spec.raw_columns.size();
  double* raw = spec.kind == TransformKind::pca_full ? scratch : out;
  for (std::size_t c = 0; c < p; ++c) {
    const auto& rc = spec.raw_columns[c];
    const Cell& cell = row[rc.feature];
    if (rc.category) {
      raw[c] = (!is_missing(cell) && std::get<std::string>(cell) == *rc.category) ? 1.0 : 0.0;
    } else {
      raw[c] = is_missing(cell) ? rc.missing_fill : std::get<double>(cell);
    }
  }
  if (spec.kind == TransformKind::standardize) {
    for (std::size_t c = 0; c < p; ++c) {
      out[c] = spec.scale[static_cast<Eigen::Index>(c)] > 0.0
                   ? (raw[c] - spec.center[static_cast<Eigen::Index>(c)]) / spec.scale[static_cast<Eigen::Index>(c)]
                   : 0.0;
    }
  } else if (spec.kind == TransformKind::pca_full) {
    for (std::size_t c = 0; c < p; ++c) raw[c] -= spec.center[static_cast<Eigen::Index>(c)];
    for (std::size_t k = 0; k < p; ++k) {
      double s = 0.0;
      for (std::size_t c = 0; c < p; ++c) {
        s += raw[c] * spec.components(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k));
      }
      out[k] = s;
    }
  }
}

void check_schema(const TransformSpec& spec, const Dataset& ds) {
  if (ds.dims() != spec.schema.size()) throw TransformError("dataset width differs from fitted schema");
  for (std::size_t j = 0; j < ds.dims(); ++j) {
    if (ds.schema()[j].name != spec.schema[j].name || ds.schema()[j].kind != spec.schema[j].kind) {
      throw TransformError("column " + std::to_string(j) + " ('" + ds.schema()[j].name +
                           "') does not match fitted schema");
    }
  }
}

Matrix encode_all(const TransformSpec& spec, const Dataset& ds, bool parallel) {
  check_schema(spec, ds);
  const auto n = static_cast<std::ptrdiff_t>(ds.size());
  const std::size_t width = spec.output_dim();
  Matrix out(n, static_cast<Eigen::Index>(width));
  // Exceptions must not escape an OpenMP region; record the first failure per row.
  std::vector<std::string> errors(static_cast<std::size_t>(n));
  bool failed = false;
#pragma omp parallel for schedule(static) if (parallel) reduction(|| : failed)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::vector<double> scratch(spec.raw_columns.size());
    try {
      encode_row(spec, ds.rows()[static_cast<std::size_t>(i)], out.row(i).data(), scratch.data());
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
      failed = true;
    }
  }
  if (failed) {
    for (std::size_t i = 0; i < errors.size(); ++i) {
      if (!errors[i].empty()) throw TransformError("row " + std::to_string(i) + ": " + errors[i]);
    }
  }
  return out;
}

}  // namespace

TransformSpec fit_transform(const Dataset& ds, const TransformOptions& options) {
  if (ds.size() == 0) throw FitError("fit_transform: empty dataset");
  TransformSpec spec;
  spec.kind = options.kind;
  spec.schema = ds.schema();

  if (is_woe(options.kind)) {
    spec.woe = woe_fit(ds, options.fine_bins, options.kind == TransformKind::woe_coarse, options.max_bins,
                       options.min_share);
    for (const auto& f : ds.schema()) spec.output_names.push_back(f.name);
  } else {
    for (std::size_t j = 0; j < ds.dims(); ++j) {
      const auto& f = ds.schema()[j];
      if (f.kind == FeatureKind::numeric) {
        double sum = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < ds.size(); ++i) {
          if (!is_missing(ds.cell(i, j))) {
            sum += std::get<double>(ds.cell(i, j));
            ++cnt;
          }
        }
        spec.raw_columns.push_back({j, std::nullopt, cnt ? sum / static_cast<double>(cnt) : 0.0});
        spec.output_names.push_back(f.name);
      } else {
        std::set<std::string> cats;
        for (std::size_t i = 0; i < ds.size(); ++i) {
          if (!is_missing(ds.cell(i, j))) cats.insert(std::get<std::string>(ds.cell(i, j)));
        }
        for (const auto& c : cats) {
          spec.raw_columns.push_back({j, c, 0.0});
          spec.output_names.push_back(f.name + "=" + c);
        }
      }
    }
    const auto p = static_cast<Eigen::Index>(spec.raw_columns.size());
    if (options.kind != TransformKind::raw) {
      TransformSpec raw_spec = spec;
      raw_spec.kind = TransformKind::raw;
      Matrix raw = encode_all(raw_spec, ds, false);
      spec.center = raw.colwise().mean().transpose();
      Matrix centered = raw.rowwise() - spec.center.transpose();
      if (options.kind == TransformKind::standardize) {
        spec.scale = (centered.array().square().colwise().sum() / static_cast<double>(raw.rows())).sqrt().transpose();
      } else {
        const double denom = raw.rows() > 1 ? static_cast<double>(raw.rows() - 1) : 1.0;
        Matrix cov = (centered.transpose() * centered) / denom;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success) throw FitError("pca: eigendecomposition failed");
        spec.components.resize(p, p);
        for (Eigen::Index k = 0; k < p; ++k) {
          // Eigen returns ascending eigenvalues; keep all components, largest first.
          Vector v = eig.eigenvectors().col(p - 1 - k);
          Eigen::Index arg = 0;
          v.cwiseAbs().maxCoeff(&arg);
          if (v[arg] < 0.0) v = -v;
          spec.components.col(k) = v;
        }
        spec.output_names.clear();
        for (Eigen::Index k = 0; k < p; ++k) spec.output_names.push_back("pc" + std::to_string(k + 1));
      }
    }
  }

  Matrix train = encode_all(spec, ds, true);
  spec.col_min = train.colwise().minCoeff().transpose();
  spec.col_max = train.colwise().maxCoeff().transpose();
  spec.constant.resize(static_cast<std::size_t>(train.cols()));
  for (Eigen::Index c = 0; c < train.cols(); ++c) {
    spec.constant[static_cast<std::size_t>(c)] = !(spec.col_max[c] > spec.col_min[c]);
  }
  return spec;
}

Matrix apply_unscaled(const TransformSpec& spec, const Dataset& ds) { return encode_all(spec, ds, true); }

Matrix apply_unscaled_serial(const TransformSpec& spec, const Dataset& ds) { return encode_all(spec, ds, false); }

Matrix rescale(const TransformSpec& spec, const Matrix& unscaled) {
  if (unscaled.cols() != static_cast<Eigen::Index>(spec.output_dim())) {
    throw TransformError("rescale: column count mismatch");
  }
  Matrix out(unscaled.rows(), unscaled.cols());
  for (Eigen::Index c = 0; c < unscaled.cols(); ++c) {
    if (spec.constant[static_cast<std::size_t>(c)]) {
      out.col(c).setZero();
      continue;
    }
    const double lo = spec.col_min[c];
    const double span = spec.col_max[c] - lo;
    for (Eigen::Index i = 0; i < unscaled.rows(); ++i) {
      out(i, c) = std::clamp((unscaled(i, c) - lo) / span, 0.0, 1.0);
    }
  }
  return out;
}

Matrix apply_transform(const TransformSpec& spec, const Dataset& ds) { return rescale(spec, apply_unscaled(spec, ds)); }

// ---------------------------------------------------------------------------
// JSON

namespace {

std::string bin_kind_name(Bin::Kind k) {
  switch (k) {
    case Bin::Kind::interval: return "interval";
    case Bin::Kind::categories: return "categories";
    case Bin::Kind::missing: return "missing";
  }
  return "interval";
}

Bin::Kind bin_kind_from(const std::string& s) {
  if (s == "interval") return Bin::Kind::interval;
  if (s == "categories") return Bin::Kind::categories;
  if (s == "missing") return Bin::Kind::missing;
  throw ConfigError("unknown bin kind '" + s + "'");
}

nlohmann::json vec_json(const Vector& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(format_double(v[i]));
  return a;
}

Vector vec_from(const nlohmann::json& a) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = parse_double(a[i].get<std::string>());
  return v;
}

}  // namespace

nlohmann::json to_json(const BinSpec& spec) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& b : spec.bins) {
    nlohmann::json jb{{"kind", bin_kind_name(b.kind)}, {"goods", b.goods}, {"bads", b.bads},
                      {"woe", format_double17(b.woe)}};
    if (b.kind == Bin::Kind::interval) {
      jb["lower"] = bound_text(b.lower);
      jb["upper"] = bound_text(b.upper);
    } else if (b.kind == Bin::Kind::categories) {
      jb["categories"] = b.categories;
    }
    bins.push_back(std::move(jb));
  }
  nlohmann::json j{{"feature", spec.feature},
                   {"kind", spec.kind == FeatureKind::numeric ? "numeric" : "categorical"},
                   {"bins", bins}};
  j["fallback"] = spec.fallback ? nlohmann::json(*spec.fallback) : nlohmann::json(nullptr);
  return j;
}

BinSpec bin_spec_from_json(const nlohmann::json& j) {
  BinSpec s;
  s.feature = j.at("feature").get<std::string>();
  s.kind = j.at("kind").get<std::string>() == "numeric" ? FeatureKind::numeric : FeatureKind::categorical;
  for (const auto& jb : j.at("bins")) {
    Bin b;
    b.kind = bin_kind_from(jb.at("kind").get<std::string>());
    b.goods = jb.at("goods").get<std::int64_t>();
    b.bads = jb.at("bads").get<std::int64_t>();
    b.woe = parse_double(jb.at("woe").get<std::string>());
    if (b.kind == Bin::Kind::interval) {
      b.lower = parse_double(jb.at("lower").get<std::string>());
      b.upper = parse_double(jb.at("upper").get<std::string>());
    } else if (b.kind == Bin::Kind::categories) {
      b.categories = jb.at("categories").get<std::vector<std::string>>();
    }
    s.bins.push_back(std::move(b));
  }
  if (j.contains("fallback") && !j.at("fallback").is_null()) s.fallback = j.at("fallback").get<std::size_t>();
  return s;
}

nlohmann::json to_json(const TransformSpec& spec) {
  SchemaFile sf{spec.schema, ""};
  nlohmann::json j{{"kind", to_string(spec.kind)},
                   {"schema", schema_to_json(sf).at("features")},
                   {"output_names", spec.output_names},
                   {"col_min", vec_json(spec.col_min)},
                   {"col_max", vec_json(spec.col_max)},
                   {"constant", spec.constant}};
  if (spec.woe) {
    nlohmann::json feats = nlohmann::json::array();
    for (const auto& f : spec.woe->features) feats.push_back(to_json(f));
    j["woe"] = {{"total_goods", spec.woe->total_goods}, {"total_bads", spec.woe->total_bads}, {"features", feats}};
  }
  if (!spec.raw_columns.empty()) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& rc : spec.raw_columns) {
      nlohmann::json c{{"feature", rc.feature}, {"missing_fill", format_double(rc.missing_fill)}};
      c["category"] = rc.category ? nlohmann::json(*rc.category) : nlohmann::json(nullptr);
      cols.push_back(std::move(c));
    }
    j["raw_columns"] = cols;
  }
  if (spec.center.size()) j["center"] = vec_json(spec.center);
  if (spec.scale.size()) j["scale"] = vec_json(spec.scale);
  if (spec.components.size()) {
    nlohmann::json cols = nlohmann::json::array();
    for (Eigen::Index k = 0; k < spec.components.cols(); ++k) cols.push_back(vec_json(spec.components.col(k)));
    j["components"] = cols;
  }
  return j;
}

TransformSpec transform_spec_from_json(const nlohmann::json& j) {
  TransformSpec s;
  s.kind = transform_kind_from_string(j.at("kind").get<std::string>());
  s.schema = schema_from_json({{"label_column", ""}, {"features", j.at("schema")}}).features;
  s.output_names = j.at("output_names").get<std::vector<std::string>>();
  s.col_min = vec_from(j.at("col_min"));
  s.col_max = vec_from(j.at("col_max"));
  s.constant = j.at("constant").get<std::vector<bool>>();
  if (j.contains("woe")) {
    WoeTable t;
    t.total_goods = j["woe"].at("total_goods").get<std::int64_t>();
    t.total_bads = j["woe"].at("total_bads").get<std::int64_t>();
    for (const auto& f : j["woe"].at("features")) t.features.push_back(bin_spec_from_json(f));
    s.woe = std::move(t);
  }
  if (j.contains("raw_columns")) {
    for (const auto& c : j["raw_columns"]) {
      RawColumn rc;
      rc.feature = c.at("feature").get<std::size_t>();
      rc.missing_fill = parse_double(c.at("missing_fill").get<std::string>());
      if (!c.at("category").is_null()) rc.category = c.at("category").get<std::string>();
      s.raw_columns.push_back(std::move(rc));
    }
  }
  if (j.contains("center")) s.center = vec_from(j["center"]);
  if (j.contains("scale")) s.scale = vec_from(j["scale"]);
  if (j.contains("components")) {
    const auto& cols = j["components"];
    const auto p = static_cast<Eigen::Index>(cols.size());
    s.components.resize(p, p);
    for (Eigen::Index k = 0; k < p; ++k) s.components.col(k) = vec_from(cols[static_cast<std::size_t>(k)]);
  }
  if (s.col_min.size() != static_cast<Eigen::Index>(s.output_dim()) ||
      s.constant.size() != s.output_dim()) {
    throw LoadError("transform spec: scaling vectors do not match output width");
  }
  return s;
}

}  // namespace creditvae
