#include "mia/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

using nlohmann::json;

namespace {

DefenseKind defense_kind_from_name(const std::string& name) {
  if (name == "none") return DefenseKind::none;
  if (name == "l1") return DefenseKind::l1;
  if (name == "l2") return DefenseKind::l2;
  if (name == "dropout") return DefenseKind::dropout;
  if (name == "grad_noise") return DefenseKind::grad_noise;
  if (name == "augment_flip") return DefenseKind::augment_flip;
  throw ConfigError("unknown defense kind '" + name + "'");
}

DefenseConfig defense_from_json(const json& j) {
  DefenseConfig d;
  d.kind = defense_kind_from_name(j.value("kind", "none"));
  d.value = j.value("value", 0.0);
  d.validate();
  return d;
}

void parse_dataset(const json& j, DatasetConfig& out) {
  std::string kind = j.value("kind", "blobs");
  if (kind == "blobs") out.kind = DatasetConfig::Kind::blobs;
  else if (kind == "csv") out.kind = DatasetConfig::Kind::csv;
  else throw ConfigError("dataset kind must be 'blobs' or 'csv'");
  if (j.contains("blob")) {
    const json& b = j["blob"];
    out.blob.num_classes = b.value("num_classes", out.blob.num_classes);
    out.blob.dim = b.value("dim", out.blob.dim);
    out.blob.stddev = b.value("stddev", out.blob.stddev);
    out.blob.count = b.value("count", out.blob.count);
    out.blob.seed = b.value("seed", out.blob.seed);
    if (b.contains("means")) {
      out.blob.means = b["means"].get<std::vector<std::vector<double>>>();
    }
  }
  out.path = j.value("path", out.path);
  if (j.contains("split")) {
    auto sizes = j["split"].get<std::vector<int>>();
    if (sizes.size() != 3) throw ConfigError("dataset split must be [train, test, shadow]");
    out.split = {sizes[0], sizes[1], sizes[2]};
  }
  out.seed = j.value("seed", out.seed);
}

void parse_model(const json& j, AuditConfig& cfg) {
  if (j.contains("hidden")) cfg.arch.hidden = j["hidden"].get<std::vector<int>>();
  cfg.train.epochs = j.value("epochs", cfg.train.epochs);
  cfg.train.batch_size = j.value("batch_size", cfg.train.batch_size);
  cfg.train.learning_rate = j.value("learning_rate", cfg.train.learning_rate);
  cfg.train.seed = j.value("seed", cfg.train.seed);
  if (j.contains("defense")) cfg.train.defense = defense_from_json(j["defense"]);
}

void parse_transfer(const json& j, TransferConfig& out) {
  if (j.contains("metric")) out.metric = metric_from_name(j["metric"].get<std::string>());
  out.shadow_train.epochs = j.value("shadow_epochs", out.shadow_train.epochs);
  if (j.contains("threshold")) {
    const json& t = j["threshold"];
    std::string mode = t.value("mode", "shadow");
    if (mode == "shadow") out.threshold.mode = ThresholdRule::Mode::shadow_estimated;
    else if (mode == "fixed") out.threshold.mode = ThresholdRule::Mode::fixed;
    else throw ConfigError("transfer threshold mode must be 'shadow' or 'fixed'");
    out.threshold.percentile = t.value("percentile", out.threshold.percentile);
    out.threshold.holdout_fraction =
        t.value("holdout_fraction", out.threshold.holdout_fraction);
    out.threshold.fixed_value = t.value("value", out.threshold.fixed_value);
  }
  out.threshold.validate();
}

void parse_boundary(const json& j, BoundaryAttackConfig& out) {
  if (j.contains("scheme")) {
    out.scheme.scheme = boundary_scheme_from_name(j["scheme"].get<std::string>());
  }
  out.scheme.max_queries = j.value("max_queries", out.scheme.max_queries);
  out.scheme.bin_tolerance = j.value("bin_tolerance", out.scheme.bin_tolerance);
  out.scheme.grad_queries = j.value("grad_queries", out.scheme.grad_queries);
  out.scheme.seed = j.value("seed", out.scheme.seed);
  if (j.contains("metric")) out.metric = lp_from_name(j["metric"].get<std::string>());
  if (j.contains("threshold")) {
    const json& t = j["threshold"];
    std::string mode = t.value("mode", "random_probes");
    if (mode == "random_probes") out.threshold.mode = BoundaryThresholdRule::Mode::random_probes;
    else if (mode == "fixed") out.threshold.mode = BoundaryThresholdRule::Mode::fixed;
    else if (mode == "none") out.threshold.mode = BoundaryThresholdRule::Mode::none;
    else throw ConfigError("boundary threshold mode must be random_probes, fixed or none");
    out.threshold.fixed_value = t.value("value", out.threshold.fixed_value);
    out.threshold.probes.num_probes = t.value("num_probes", out.threshold.probes.num_probes);
    out.threshold.probes.t_percentile =
        t.value("t_percentile", out.threshold.probes.t_percentile);
    std::string dist = t.value("distribution", "uniform");
    if (dist == "uniform") out.threshold.probes.distribution = ProbeDistribution::uniform;
    else if (dist == "gaussian") out.threshold.probes.distribution = ProbeDistribution::gaussian;
    else throw ConfigError("probe distribution must be 'uniform' or 'gaussian'");
    out.threshold.probes.gaussian_mean =
        t.value("gaussian_mean", out.threshold.probes.gaussian_mean);
    out.threshold.probes.gaussian_stddev =
        t.value("gaussian_stddev", out.threshold.probes.gaussian_stddev);
  }
  out.scheme.validate();
}

}  // namespace

AuditConfig default_config() { return AuditConfig{}; }

AuditConfig config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config JSON: ") + e.what());
  }
  AuditConfig cfg;
  try {
    if (j.contains("dataset")) parse_dataset(j["dataset"], cfg.dataset);
    if (j.contains("model")) parse_model(j["model"], cfg);
    if (j.contains("transfer")) parse_transfer(j["transfer"], cfg.transfer);
    if (j.contains("boundary")) parse_boundary(j["boundary"], cfg.boundary);
    if (j.contains("smoothing")) {
      cfg.smoothing.sigma = j["smoothing"].value("sigma", cfg.smoothing.sigma);
      cfg.smoothing.num_samples = j["smoothing"].value("n", cfg.smoothing.num_samples);
      cfg.smoothing.seed = j["smoothing"].value("seed", cfg.smoothing.seed);
      cfg.smoothing.validate();
    }
    if (j.contains("ladder")) {
      const json& l = j["ladder"];
      if (l.contains("train_sizes")) {
        cfg.ladder_train_sizes = l["train_sizes"].get<std::vector<int>>();
      }
      if (l.contains("test_size")) cfg.dataset.split.n_test = l["test_size"].get<int>();
      if (l.contains("shadow_size")) cfg.dataset.split.n_shadow = l["shadow_size"].get<int>();
    }
    if (j.contains("defense_matrix")) {
      const json& d = j["defense_matrix"];
      cfg.defense_train_size = d.value("train_size", cfg.defense_train_size);
      if (d.contains("defenses")) {
        cfg.defenses.clear();
        for (const auto& dj : d["defenses"]) cfg.defenses.push_back(defense_from_json(dj));
      }
    }
    if (j.contains("sweep")) {
      if (j["sweep"].contains("budgets")) {
        cfg.sweep_budgets = j["sweep"]["budgets"].get<std::vector<std::uint64_t>>();
      }
    }
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  cfg.digest = hex64(fnv1a64(text.data(), text.size()));
  return cfg;
}

AuditConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json_text(buffer.str());
}

MaterializedDataset materialize_dataset(const AuditConfig& cfg) {
  MaterializedDataset out;
  std::vector<LabeledSample> corpus;
  if (cfg.dataset.kind == DatasetConfig::Kind::blobs) {
    BlobConfig blob = cfg.dataset.blob;
    if (blob.count == 0) {
      blob.count =
          cfg.dataset.split.n_train + cfg.dataset.split.n_test + cfg.dataset.split.n_shadow;
    }
    corpus = generate_blobs(blob);
    out.arch.num_classes = blob.num_classes;
    out.arch.input_dim = blob.dim;
  } else {
    if (cfg.dataset.path.empty()) throw ConfigError("csv dataset needs a path");
    corpus = load_csv(cfg.dataset.path);
    if (corpus.empty()) throw ConfigError("csv dataset is empty");
    out.arch.num_classes = num_classes_of(corpus);
    out.arch.input_dim = corpus.front().x.dim();
  }
  out.arch.hidden = cfg.arch.hidden;
  out.arch.validate();
  out.split = split_dataset(corpus, cfg.dataset.split, cfg.dataset.seed);
  return out;
}

LadderConfig ladder_from_config(const AuditConfig& cfg) {
  if (cfg.dataset.kind != DatasetConfig::Kind::blobs) {
    throw ConfigError("the ladder runs on blob datasets");
  }
  LadderConfig ladder;
  ladder.blob = cfg.dataset.blob;
  ladder.train_sizes = cfg.ladder_train_sizes;
  ladder.test_size = cfg.dataset.split.n_test;
  ladder.shadow_size = cfg.dataset.split.n_shadow;
  ladder.arch = cfg.arch;
  ladder.arch.input_dim = cfg.dataset.blob.dim;
  ladder.arch.num_classes = cfg.dataset.blob.num_classes;
  ladder.train = cfg.train;
  ladder.seed = cfg.seed;
  ladder.validate();
  return ladder;
}

}  // namespace mia
