#include "creditvae/pipeline.hpp"

#include "creditvae/embed.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace creditvae {

namespace fs = std::filesystem;

std::uint64_t stage_seed(std::uint64_t master, Stage stage) {
  return derive_seed(master, static_cast<std::uint64_t>(stage));
}

namespace {

const std::set<std::string> kTopLevelKeys = {"dataset", "schema", "missing_token", "transform", "split",
                                             "architecture", "train", "embed", "labeling", "salient", "pd",
                                             "synth", "output_dir", "seed"};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw LoadError(path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

fs::path dataset_path(const PipelineConfig& cfg) {
  return cfg.dataset.empty() ? cfg.output_dir / "dataset.csv" : cfg.dataset;
}

fs::path schema_path(const PipelineConfig& cfg) {
  return cfg.schema.empty() ? cfg.output_dir / "schema.json" : cfg.schema;
}

fs::path artifact(const PipelineConfig& cfg, const char* name) { return cfg.output_dir / name; }

// Upstream artifacts must exist before a stage runs.
void require(const fs::path& path, const std::string& producing_stage) {
  if (!fs::exists(path)) {
    throw StageError("missing " + path.string() + "; run the '" + producing_stage + "' stage first");
  }
}

void write_meta(const PipelineConfig& cfg, const fs::path& file, const std::string& stage) {
  write_json({{"file", file.filename().string()}, {"stage", stage}, {"config_hash", cfg.hash()}, {"seed", cfg.seed}},
             fs::path(file.string() + ".meta.json"));
}

Dataset load_dataset(const PipelineConfig& cfg) {
  const fs::path data = dataset_path(cfg);
  const fs::path schema = schema_path(cfg);
  require(data, "synth");
  require(schema, "synth");
  SchemaFile sf = load_schema(schema);
  return load_csv(data, sf.features, sf.label_column, cfg.missing_token);
}

Architecture resolve_architecture(const PipelineConfig& cfg, std::size_t input_dim) {
  Architecture a;
  if (cfg.architecture) {
    a = *cfg.architecture;
    a.input_dim = input_dim;
  } else {
    a = architecture_preset(cfg.preset, input_dim);
  }
  if (cfg.epochs) a.epochs = *cfg.epochs;
  a.validate();
  return a;
}

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= static_cast<std::size_t>(m.rows())) throw ContractError("row index out of range");
    out.row(static_cast<Eigen::Index>(k)) = m.row(static_cast<Eigen::Index>(rows[k]));
  }
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kTopLevelKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  PipelineConfig c;
  try {
    if (j.contains("dataset")) c.dataset = resolve(base_dir, j["dataset"].get<std::string>());
    if (j.contains("schema")) c.schema = resolve(base_dir, j["schema"].get<std::string>());
    c.missing_token = j.value("missing_token", std::string());
    if (j.contains("transform")) {
      const auto& t = j["transform"];
      c.transform.kind = transform_kind_from_string(t.value("kind", std::string("woe_coarse")));
      c.transform.fine_bins = t.value("fine_bins", c.transform.fine_bins);
      c.transform.max_bins = t.value("max_bins", c.transform.max_bins);
      c.transform.min_share = t.value("min_share", c.transform.min_share);
    }
    if (j.contains("split")) c.train_fraction = j["split"].value("train_fraction", c.train_fraction);
    if (j.contains("architecture")) {
      const auto& a = j["architecture"];
      if (a.is_string()) {
        c.preset = a.get<std::string>();
        architecture_preset(c.preset, 1);
      } else {
        nlohmann::json full = a;
        full["input_dim"] = 1;
        c.architecture = architecture_from_json(full);
      }
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      if (t.contains("epochs")) c.epochs = t["epochs"].get<std::size_t>();
      c.batch_size = t.value("batch_size", c.batch_size);
      c.adagrad_epsilon = t.value("adagrad_epsilon", c.adagrad_epsilon);
      c.momentum = t.value("momentum", c.momentum);
      c.log_every = t.value("log_every", c.log_every);
    }
    if (j.contains("embed")) {
      c.embed_mode = j["embed"].value("mode", c.embed_mode);
      c.mc_samples = j["embed"].value("samples", c.mc_samples);
      if (c.embed_mode != "mean" && c.embed_mode != "mc") throw ConfigError("embed.mode must be 'mean' or 'mc'");
    }
    if (j.contains("labeling")) {
      const auto& l = j["labeling"];
      if (l.contains("n_min") && !l["n_min"].is_null()) c.n_min = l["n_min"].get<std::size_t>();
      c.rho = l.value("rho", c.rho);
      c.subsample_cap = l.value("subsample_cap", c.subsample_cap);
      c.exact_max = l.value("exact_max", c.exact_max);
    }
    if (j.contains("salient")) {
      const auto& s = j["salient"];
      c.salient.sd_multiplier = s.value("sd_multiplier", c.salient.sd_multiplier);
      c.salient.epsilon_out = s.value("epsilon_out", c.salient.epsilon_out);
      c.salient_space = s.value("space", c.salient_space);
      if (c.salient_space != "transformed" && c.salient_space != "raw") {
        throw ConfigError("salient.space must be 'transformed' or 'raw'");
      }
    }
    if (j.contains("pd")) {
      c.pd.learning_rate = j["pd"].value("learning_rate", c.pd.learning_rate);
      c.pd.iterations = j["pd"].value("iterations", c.pd.iterations);
    }
    if (j.contains("synth")) {
      SynthSettings s;
      s.n = j["synth"].at("n").get<std::size_t>();
      s.segments = segments_from_json(j["synth"].at("segments"));
      c.synth = std::move(s);
    }
    c.output_dir = resolve(base_dir, j.value("output_dir", std::string("out")));
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.source = j;
  c.source["seed"] = c.seed;
  return c;
}

PipelineConfig PipelineConfig::load(const fs::path& path) {
  return from_json(read_json(path), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  source["seed"] = s;
}

void PipelineConfig::set_output_dir(const fs::path& dir) { output_dir = dir; }

std::string PipelineConfig::hash() const {
  nlohmann::json j = source;
  j.erase("output_dir");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

void write_matrix_csv(const Matrix& m, const std::vector<std::string>& names, const fs::path& path) {
  if (names.size() != static_cast<std::size_t>(m.cols())) throw ContractError("write_matrix_csv: names/cols mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "row_id";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << i;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
    out << '\n';
  }
}

Matrix read_matrix_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw LoadError(path.string() + ": empty matrix file");
  const std::size_t width = split_csv_line(line).size() - 1;
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != width + 1 || f[0] != std::to_string(rows)) {
      throw LoadError(path.string() + ": malformed matrix row " + std::to_string(rows + 2));
    }
    for (std::size_t k = 1; k < f.size(); ++k) values.push_back(parse_double(f[k]));
    ++rows;
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

void cmd_synth(const PipelineConfig& cfg, std::ostream& log) {
  if (!cfg.synth) throw ConfigError("synth: config has no 'synth' section");
  fs::create_directories(cfg.output_dir);
  const fs::path data = dataset_path(cfg);
  const fs::path schema = schema_path(cfg);
  if (data.has_parent_path()) fs::create_directories(data.parent_path());
  if (schema.has_parent_path()) fs::create_directories(schema.parent_path());
  Dataset ds = synth_generate(cfg.synth->segments, cfg.synth->n, stage_seed(cfg.seed, Stage::synth));
  const std::string label = "default_90dpd";
  write_csv(ds, data, label, cfg.missing_token);
  save_schema({ds.schema(), label}, schema);
  write_meta(cfg, data, "synth");
  std::size_t bads = 0;
  for (int y : ds.labels()) bads += static_cast<std::size_t>(y);
  log << "synth: " << ds.size() << " rows, " << bads << " defaults -> " << data.string() << '\n';
}

void cmd_transform(const PipelineConfig& cfg, std::ostream& log) {
  Dataset ds = load_dataset(cfg);
  fs::create_directories(cfg.output_dir);
  SplitPlan plan = split_majority(ds, cfg.train_fraction, stage_seed(cfg.seed, Stage::split));
  // WoE needs both classes, so the transform is fitted on every labelled row.
  TransformSpec spec = fit_transform(ds, cfg.transform);
  Matrix x = apply_transform(spec, ds);

  nlohmann::json js = to_json(spec);
  js["config_hash"] = cfg.hash();
  write_json(js, artifact(cfg, artifacts::transform_spec));
  nlohmann::json jp = split_to_json(plan);
  jp["config_hash"] = cfg.hash();
  write_json(jp, artifact(cfg, artifacts::split));
  write_matrix_csv(x, spec.output_names, artifact(cfg, artifacts::matrix));
  write_meta(cfg, artifact(cfg, artifacts::matrix), "transform");
  log << "transform: " << to_string(spec.kind) << ", " << ds.size() << " rows x " << spec.output_dim()
      << " columns; train split " << plan.train_indices.size() << ", eval " << plan.eval_indices.size() << '\n';
}

void cmd_train(const PipelineConfig& cfg, std::ostream& log) {
  require(artifact(cfg, artifacts::matrix), "transform");
  require(artifact(cfg, artifacts::split), "transform");
  const Matrix x = read_matrix_csv(artifact(cfg, artifacts::matrix));
  const SplitPlan plan = split_from_json(read_json(artifact(cfg, artifacts::split)));
  const Matrix train_rows = select_rows(x, plan.train_indices);

  TrainConfig tc;
  tc.architecture = resolve_architecture(cfg, static_cast<std::size_t>(x.cols()));
  tc.batch_size = cfg.batch_size;
  tc.seed = stage_seed(cfg.seed, Stage::train);
  tc.adagrad_epsilon = cfg.adagrad_epsilon;
  tc.momentum = cfg.momentum;
  tc.log_every = cfg.log_every;
  TrainResult r = train(train_rows, tc, [&](std::size_t epoch, const EpochStats& s) {
    log << "train: epoch " << epoch << " neg_elbo " << s.neg_elbo << " (recon " << s.recon << ", kl " << s.kl
        << ")\n";
  });

  nlohmann::json jp = params_to_json(r.params);
  jp["config_hash"] = cfg.hash();
  {
    std::ofstream out(artifact(cfg, artifacts::params), std::ios::binary);
    if (!out) throw Error("cannot write params");
    out << jp.dump() << '\n';
  }
  write_history_csv(r.history, artifact(cfg, artifacts::history));
  write_meta(cfg, artifact(cfg, artifacts::history), "train");
  log << "train: " << tc.architecture.preset_id << " on " << train_rows.rows() << " rows, "
      << r.params.parameter_count() << " parameters\n";
}

void cmd_embed(const PipelineConfig& cfg, std::ostream& log) {
  require(artifact(cfg, artifacts::params), "train");
  require(artifact(cfg, artifacts::matrix), "transform");
  const VaeParams p = load_params(artifact(cfg, artifacts::params));
  const Matrix x = read_matrix_csv(artifact(cfg, artifacts::matrix));
  LatentEmbedding emb = cfg.embed_mode == "mc" ? embed_mc(p, x, cfg.mc_samples, stage_seed(cfg.seed, Stage::embed))
                                               : embed_mean(p, x);
  write_embedding_csv(emb, artifact(cfg, artifacts::embedding));
  write_meta(cfg, artifact(cfg, artifacts::embedding), "embed");
  log << "embed: " << emb.size() << " rows (" << cfg.embed_mode << ")\n";
}

void cmd_label(const PipelineConfig& cfg, std::ostream& log) {
  require(artifact(cfg, artifacts::embedding), "embed");
  const LatentEmbedding emb = read_embedding_csv(artifact(cfg, artifacts::embedding));
  LabelingConfig lc = LabelingConfig::defaults_for(emb.size());
  if (cfg.n_min) lc.n_min = *cfg.n_min;
  lc.rho = cfg.rho;
  lc.subsample_cap = cfg.subsample_cap;
  lc.exact_max = cfg.exact_max;
  lc.seed = stage_seed(cfg.seed, Stage::label);
  const ClusterAssignment asg = label_latent(emb, lc);
  write_assignment_csv(asg, emb.row_index, artifact(cfg, artifacts::assignment));
  write_meta(cfg, artifact(cfg, artifacts::assignment), "label");
  nlohmann::json summary = assignment_summary(asg, lc);
  summary["config_hash"] = cfg.hash();
  write_json(summary, artifact(cfg, artifacts::clusters));
  log << "label: " << asg.cluster_count() << " clusters (n_min " << lc.n_min << ", rho " << lc.rho << ")\n";
}

void cmd_report(const PipelineConfig& cfg, std::ostream& log) {
  require(artifact(cfg, artifacts::transform_spec), "transform");
  require(artifact(cfg, artifacts::split), "transform");
  require(artifact(cfg, artifacts::embedding), "embed");
  require(artifact(cfg, artifacts::assignment), "label");
  const Dataset ds = load_dataset(cfg);
  const TransformSpec spec = transform_spec_from_json(read_json(artifact(cfg, artifacts::transform_spec)));
  const SplitPlan plan = split_from_json(read_json(artifact(cfg, artifacts::split)));
  const LatentEmbedding emb = read_embedding_csv(artifact(cfg, artifacts::embedding));
  const auto pairs = read_assignment_csv(artifact(cfg, artifacts::assignment));
  if (pairs.size() != emb.size()) throw StageError("report: assignment and embedding row counts differ");

  std::vector<int> labels(emb.size());
  std::vector<int> y(emb.size());
  for (std::size_t i = 0; i < emb.size(); ++i) {
    if (pairs[i].first != emb.row_index[i]) throw StageError("report: assignment rows do not match embedding rows");
    if (emb.row_index[i] >= ds.size()) throw StageError("report: embedding refers to rows beyond the dataset");
    labels[i] = pairs[i].second;
    y[i] = ds.label(emb.row_index[i]);
  }

  auto partition_report = [&](const std::vector<std::size_t>& rows) {
    std::set<std::size_t> wanted(rows.begin(), rows.end());
    std::vector<int> l, t;
    for (std::size_t i = 0; i < emb.size(); ++i) {
      if (wanted.count(emb.row_index[i])) {
        l.push_back(labels[i]);
        t.push_back(y[i]);
      }
    }
    return report_to_json(build_report(l, t));
  };

  ClusterReport all = build_report(labels, y);
  const Matrix transformed = select_rows(apply_unscaled(spec, ds), emb.row_index);
  TransformOptions raw_opts;
  raw_opts.kind = TransformKind::raw;
  const Matrix raw = select_rows(apply_unscaled(fit_transform(ds, raw_opts), ds), emb.row_index);

  const bool use_raw = cfg.salient_space == "raw";
  if (all.clusters.size() >= 2) {
    const Matrix& feats = use_raw ? raw : transformed;
    SalientResult sal = salient_dimensions(feats, labels, cfg.salient);
    all.salient = sal.salient;
    all.warnings.insert(all.warnings.end(), sal.warnings.begin(), sal.warnings.end());
    if (use_raw) {
      all.feature_names = fit_transform(ds, raw_opts).output_names;
    } else {
      all.feature_names = spec.output_names;
    }
  } else {
    all.warnings.push_back("single cluster: salient dimensions not computed");
  }

  nlohmann::json j;
  j["config_hash"] = cfg.hash();
  j["salient_space"] = cfg.salient_space;
  j["all"] = report_to_json(all);
  j["eval"] = partition_report(plan.eval_indices);
  j["train"] = partition_report(plan.train_indices);
  write_json(j, artifact(cfg, artifacts::report));

  // PD colormaps: latent coordinates, transformed inputs, standardized raw inputs.
  TransformOptions std_opts;
  std_opts.kind = TransformKind::standardize;
  const Matrix standardized = select_rows(apply_unscaled(fit_transform(ds, std_opts), ds), emb.row_index);
  const std::string transformed_tag =
      (spec.kind == TransformKind::woe_coarse || spec.kind == TransformKind::woe_fine) ? "woe" : to_string(spec.kind);
  const std::vector<std::pair<std::string, const Matrix*>> sources = {
      {"latent", &emb.points}, {transformed_tag, &transformed}, {"raw", &standardized}};
  for (const auto& [tag, feats] : sources) {
    const LogisticModel model = fit_pd_logistic(*feats, y, cfg.pd);
    const fs::path out = cfg.output_dir / ("colormap_" + tag + ".csv");
    colormap_export(emb, predict_pd(model, *feats), tag, out);
    write_meta(cfg, out, "report");
  }

  log << "report: " << all.clusters.size() << " clusters\n";
  for (const auto& s : all.clusters) {
    log << "  cluster " << s.cluster << ": n=" << s.n << " defaults=" << s.defaults << " dr=" << s.default_rate
        << " 99% CI [" << s.ci_low << ", " << s.ci_high << "]\n";
  }
}

void cmd_all(const PipelineConfig& cfg, std::ostream& log) {
  if (cfg.synth) cmd_synth(cfg, log);
  cmd_transform(cfg, log);
  cmd_train(cfg, log);
  cmd_embed(cfg, log);
  cmd_label(cfg, log);
  cmd_report(cfg, log);
}

}  // namespace creditvae
