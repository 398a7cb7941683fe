#include "creditvae/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

namespace creditvae {

namespace {

std::string kind_name(FeatureKind k) { return k == FeatureKind::numeric ? "numeric" : "categorical"; }

FeatureKind parse_kind(const std::string& s) {
  if (s == "numeric") return FeatureKind::numeric;
  if (s == "categorical") return FeatureKind::categorical;
  throw ConfigError("unknown feature kind '" + s + "'");
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace

Dataset::Dataset(std::vector<FeatureSchema> schema, std::vector<std::vector<Cell>> rows,
                 std::vector<int> labels)
    : schema_(std::move(schema)), rows_(std::move(rows)), labels_(std::move(labels)) {
  std::set<std::string> names;
  for (const auto& f : schema_) {
    if (!names.insert(f.name).second) throw ContractError("duplicate feature name '" + f.name + "'");
  }
  if (labels_.size() != rows_.size()) {
    throw ContractError("labels length " + std::to_string(labels_.size()) + " != rows " +
                        std::to_string(rows_.size()));
  }
  for (std::size_t i = 0; i < rows_.size(); ++i) {
    const auto& row = rows_[i];
    if (row.size() != schema_.size()) {
      throw ContractError("row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                          " cells, expected " + std::to_string(schema_.size()));
    }
    if (labels_[i] != 0 && labels_[i] != 1) {
      throw ContractError("row " + std::to_string(i) + " label not in {0,1}");
    }
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto& f = schema_[j];
      const Cell& c = row[j];
      bool ok = is_missing(c) ? f.allows_missing
                              : (f.kind == FeatureKind::numeric ? std::holds_alternative<double>(c)
                                                                : std::holds_alternative<std::string>(c));
      if (!ok) {
        throw ContractError("row " + std::to_string(i) + " column '" + f.name + "' does not conform to " +
                            kind_name(f.kind) + (is_missing(c) ? " (missing not allowed)" : ""));
      }
    }
  }
}

std::size_t Dataset::column(const std::string& name) const {
  for (std::size_t j = 0; j < schema_.size(); ++j) {
    if (schema_[j].name == name) return j;
  }
  throw ContractError("no feature named '" + name + "'");
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices) const {
  std::vector<std::vector<Cell>> rows;
  std::vector<int> labels;
  rows.reserve(indices.size());
  labels.reserve(indices.size());
  for (auto i : indices) {
    rows.push_back(rows_.at(i));
    labels.push_back(labels_.at(i));
  }
  Dataset out;
  out.schema_ = schema_;
  out.rows_ = std::move(rows);
  out.labels_ = std::move(labels);
  return out;
}

SchemaFile schema_from_json(const nlohmann::json& j) {
  SchemaFile s;
  s.label_column = j.at("label_column").get<std::string>();
  for (const auto& f : j.at("features")) {
    FeatureSchema fs;
    fs.name = f.at("name").get<std::string>();
    fs.kind = parse_kind(f.at("kind").get<std::string>());
    fs.allows_missing = f.value("allows_missing", true);
    s.features.push_back(std::move(fs));
  }
  return s;
}

nlohmann::json schema_to_json(const SchemaFile& s) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : s.features) {
    features.push_back({{"name", f.name}, {"kind", kind_name(f.kind)}, {"allows_missing", f.allows_missing}});
  }
  return {{"label_column", s.label_column}, {"features", features}};
}

SchemaFile load_schema(const std::filesystem::path& path) {
  try {
    return schema_from_json(nlohmann::json::parse(read_all(path)));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError("schema " + path.string() + ": " + e.what());
  }
}

void save_schema(const SchemaFile& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << schema_to_json(s).dump(2) << '\n';
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

Dataset load_csv(const std::filesystem::path& path, const std::vector<FeatureSchema>& schema,
                 const std::string& label_column, const std::string& missing_token) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError(path.string() + ": empty file, no header");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  auto header = split_csv_line(line);

  std::unordered_map<std::string, std::size_t> pos;
  for (std::size_t i = 0; i < header.size(); ++i) pos.emplace(header[i], i);
  auto find = [&](const std::string& name) {
    auto it = pos.find(name);
    if (it == pos.end()) throw LoadError(path.string() + ": header lacks column '" + name + "'");
    return it->second;
  };
  std::vector<std::size_t> feature_pos;
  for (const auto& f : schema) feature_pos.push_back(find(f.name));
  std::size_t label_pos = find(label_column);

  std::vector<std::vector<Cell>> rows;
  std::vector<int> labels;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    auto fail = [&](const std::string& why) {
      throw LoadError(path.string() + ": row " + std::to_string(line_no) + ": " + why);
    };
    if (fields.size() != header.size()) {
      fail("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    const auto& lab = fields[label_pos];
    if (lab == "0") {
      labels.push_back(0);
    } else if (lab == "1") {
      labels.push_back(1);
    } else {
      fail("label '" + lab + "' not in {0,1}");
    }
    std::vector<Cell> row;
    row.reserve(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& raw = fields[feature_pos[j]];
      if (raw.empty() || raw == missing_token) {
        if (!schema[j].allows_missing) fail("missing value in '" + schema[j].name + "'");
        row.emplace_back(Missing{});
      } else if (schema[j].kind == FeatureKind::numeric) {
        try {
          double v = parse_double(raw);
          if (!std::isfinite(v)) fail("non-finite value in '" + schema[j].name + "'");
          row.emplace_back(v);
        } catch (const ContractError&) {
          fail("unparsable numeric '" + raw + "' in '" + schema[j].name + "'");
        }
      } else {
        row.emplace_back(raw);
      }
    }
    rows.push_back(std::move(row));
  }
  return Dataset(schema, std::move(rows), std::move(labels));
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column,
               const std::string& missing_token) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& f : ds.schema()) out << quote_if_needed(f.name) << ',';
  out << quote_if_needed(label_column) << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (const auto& c : ds.rows()[i]) {
      if (is_missing(c)) {
        out << quote_if_needed(missing_token);
      } else if (auto* v = std::get_if<double>(&c)) {
        out << format_double(*v);
      } else {
        out << quote_if_needed(std::get<std::string>(c));
      }
      out << ',';
    }
    out << ds.label(i) << '\n';
  }
}

SplitPlan split_majority(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ContractError("train_fraction must lie in (0,1)");
  }
  std::vector<std::size_t> majority;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.label(i) == 0) majority.push_back(i);
  }
  if (majority.empty()) throw ContractError("split: dataset has no majority-class (label 0) rows");

  // 1e-9 absorbs representation error, e.g. 0.3 * 950 = 284.99999999999994.
  auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(majority.size()) + 1e-9));
  std::mt19937_64 rng(seed);
  std::shuffle(majority.begin(), majority.end(), rng);

  SplitPlan plan;
  plan.seed = seed;
  plan.train_indices.assign(majority.begin(), majority.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::sort(plan.train_indices.begin(), plan.train_indices.end());
  std::vector<char> in_train(ds.size(), 0);
  for (auto i : plan.train_indices) in_train[i] = 1;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!in_train[i]) plan.eval_indices.push_back(i);
  }
  return plan;
}

nlohmann::json split_to_json(const SplitPlan& plan) {
  return {{"seed", plan.seed}, {"train_indices", plan.train_indices}, {"eval_indices", plan.eval_indices}};
}

SplitPlan split_from_json(const nlohmann::json& j) {
  SplitPlan p;
  p.seed = j.at("seed").get<std::uint64_t>();
  p.train_indices = j.at("train_indices").get<std::vector<std::size_t>>();
  p.eval_indices = j.at("eval_indices").get<std::vector<std::size_t>>();
  return p;
}

Dataset synth_generate(const std::vector<Segment>& segments, std::size_t n, std::uint64_t seed) {
  return synth_generate(segments, n, seed, nullptr);
}

Dataset synth_generate(const std::vector<Segment>& segments, std::size_t n, std::uint64_t seed,
                       std::vector<int>* segment_of_row) {
  if (segments.empty()) throw ConfigError("synth: no segments");
  double total = 0.0;
  for (const auto& s : segments) {
    if (s.weight < 0.0) throw ConfigError("synth: negative segment weight");
    if (s.default_probability < 0.0 || s.default_probability > 1.0) {
      throw ConfigError("synth: default probability outside [0,1]");
    }
    total += s.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError("synth: segment weights sum to " + format_double(total));

  const auto& ref = segments.front().features;
  std::vector<FeatureSchema> schema;
  for (const auto& f : ref) schema.push_back({f.name, f.kind, true});
  for (const auto& s : segments) {
    if (s.features.size() != ref.size()) throw ConfigError("synth: segments declare different feature counts");
    for (std::size_t j = 0; j < ref.size(); ++j) {
      const auto& f = s.features[j];
      if (f.name != ref[j].name || f.kind != ref[j].kind) {
        throw ConfigError("synth: feature " + std::to_string(j) + " differs across segments");
      }
      if (f.kind == FeatureKind::categorical) {
        if (f.categories.empty() || f.categories.size() != f.probabilities.size()) {
          throw ConfigError("synth: feature '" + f.name + "' needs matching categories/probabilities");
        }
      } else if (f.variance < 0.0) {
        throw ConfigError("synth: feature '" + f.name + "' has negative variance");
      }
    }
  }

  std::vector<double> cumulative;
  double acc = 0.0;
  for (const auto& s : segments) cumulative.push_back(acc += s.weight);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::vector<Cell>> rows;
  std::vector<int> labels;
  rows.reserve(n);
  labels.reserve(n);
  if (segment_of_row) segment_of_row->clear();
  for (std::size_t i = 0; i < n; ++i) {
    double u = unif(rng) * acc;
    auto seg_idx = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                            cumulative.begin());
    seg_idx = std::min(seg_idx, segments.size() - 1);
    const auto& seg = segments[seg_idx];
    std::vector<Cell> row;
    row.reserve(ref.size());
    for (const auto& f : seg.features) {
      // Always consume the same number of draws per cell so rows stay aligned.
      double miss = unif(rng);
      double a = normal(rng);
      double b = unif(rng);
      if (miss < f.missing_rate) {
        row.emplace_back(Missing{});
      } else if (f.kind == FeatureKind::numeric) {
        row.emplace_back(f.mean + std::sqrt(f.variance) * a);
      } else {
        double psum = std::accumulate(f.probabilities.begin(), f.probabilities.end(), 0.0);
        double t = b * psum;
        std::size_t k = 0;
        double c = 0.0;
        for (; k + 1 < f.probabilities.size(); ++k) {
          c += f.probabilities[k];
          if (t < c) break;
        }
        row.emplace_back(f.categories[k]);
      }
    }
    labels.push_back(unif(rng) < seg.default_probability ? 1 : 0);
    rows.push_back(std::move(row));
    if (segment_of_row) segment_of_row->push_back(static_cast<int>(seg_idx));
  }
  return Dataset(std::move(schema), std::move(rows), std::move(labels));
}

std::vector<Segment> segments_from_json(const nlohmann::json& j) {
  std::vector<Segment> out;
  for (const auto& s : j) {
    Segment seg;
    seg.weight = s.at("weight").get<double>();
    seg.default_probability = s.at("default_probability").get<double>();
    for (const auto& f : s.at("features")) {
      FeatureGenerator g;
      g.name = f.at("name").get<std::string>();
      g.kind = parse_kind(f.value("kind", std::string("numeric")));
      g.mean = f.value("mean", 0.0);
      g.variance = f.value("variance", 1.0);
      if (f.contains("categories")) g.categories = f.at("categories").get<std::vector<std::string>>();
      if (f.contains("probabilities")) g.probabilities = f.at("probabilities").get<std::vector<double>>();
      g.missing_rate = f.value("missing_rate", 0.0);
      seg.features.push_back(std::move(g));
    }
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace creditvae
