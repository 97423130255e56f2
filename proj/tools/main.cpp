#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mia/audit.hpp"
#include "mia/boundary.hpp"
#include "mia/config.hpp"
#include "mia/error.hpp"
#include "mia/parallel.hpp"
#include "mia/remote.hpp"
#include "mia/report.hpp"
#include "mia/rng.hpp"
#include "mia/smoothing.hpp"
#include "mia/transfer.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  int workers = mia::default_workers();
  std::string model_path;
  std::string url;
  std::string format = "json";
};

mia::AuditConfig resolve_config(const GlobalOptions& opts) {
  mia::AuditConfig cfg =
      opts.config_path.empty() ? mia::default_config() : mia::load_config(opts.config_path);
  if (opts.seed) {
    cfg.seed = *opts.seed;
    cfg.dataset.seed = *opts.seed;
    cfg.dataset.blob.seed = *opts.seed;
    cfg.train.seed = mia::mix_seed(*opts.seed, 0x11u);
    cfg.boundary.scheme.seed = mia::mix_seed(*opts.seed, 0x22u);
    cfg.smoothing.seed = mia::mix_seed(*opts.seed, 0x33u);
  }
  return cfg;
}

// Local checkpoint or remote endpoint, at the requested exposure.
mia::Oracle open_oracle(const GlobalOptions& opts, mia::Exposure exposure) {
  if (!opts.url.empty()) return mia::make_remote_oracle(opts.url);
  if (opts.model_path.empty()) {
    throw mia::ConfigError("need --model <checkpoint> or --url <endpoint>");
  }
  auto model = std::make_shared<const mia::Model>(mia::load_model(opts.model_path));
  return mia::make_local_oracle(std::move(model), exposure);
}

void write_reports(const GlobalOptions& opts, const std::vector<mia::AuditReport>& reports) {
  if (opts.out.empty()) {
    for (const auto& r : reports) {
      std::printf("%-28s model=%s auc=%.4f", r.attack.c_str(), r.model_id.c_str(), r.auc);
      if (r.f1) std::printf(" f1=%.4f", *r.f1);
      if (r.threshold.set) std::printf(" tau=%.6g (%s)", r.threshold.value,
                                       r.threshold.provenance.c_str());
      std::printf(" queries=%llu\n", static_cast<unsigned long long>(r.target_queries));
    }
    return;
  }
  mia::emit_reports(reports, mia::report_format_from_name(opts.format), opts.out);
  std::printf("wrote %zu report(s) to %s\n", reports.size(), opts.out.c_str());
}

int cmd_train_target(const GlobalOptions& opts, const std::string& split_out) {
  mia::AuditConfig cfg = resolve_config(opts);
  mia::MaterializedDataset data = mia::materialize_dataset(cfg);
  mia::Model model = mia::train(data.arch, data.split.train, cfg.train);
  mia::record_generalization(model, data.split.test);
  std::printf("trained: train_acc=%.4f test_acc=%.4f gap=%.4f\n",
              model.meta.train_accuracy, model.meta.test_accuracy,
              model.meta.overfit_gap);
  if (!opts.out.empty()) {
    mia::save_model(model, opts.out);
    std::printf("checkpoint written to %s\n", opts.out.c_str());
  }
  if (!split_out.empty()) {
    mia::save_csv(data.split.train, split_out + "/train.csv");
    mia::save_csv(data.split.test, split_out + "/test.csv");
    mia::save_csv(data.split.shadow, split_out + "/shadow.csv");
    std::printf("split written under %s\n", split_out.c_str());
  }
  return 0;
}

int cmd_serve(const GlobalOptions& opts, const std::string& host, int port,
              const std::string& exposure) {
  if (opts.model_path.empty()) throw mia::ConfigError("serve-oracle needs --model");
  auto model = std::make_shared<const mia::Model>(mia::load_model(opts.model_path));
  mia::OracleServer server(model, mia::exposure_from_name(exposure));
  std::printf("serving %s on %s:%d (%s)\n", opts.model_path.c_str(), host.c_str(), port,
              exposure.c_str());
  if (!server.listen(host, port)) {
    throw mia::TransportError("cannot listen on " + host + ":" + std::to_string(port));
  }
  return 0;
}

int cmd_attack(const GlobalOptions& opts, const std::string& which) {
  mia::AuditConfig cfg = resolve_config(opts);
  mia::MaterializedDataset data = mia::materialize_dataset(cfg);
  std::vector<mia::AuditReport> reports;
  if (which == "baseline") {
    mia::Oracle oracle = open_oracle(opts, mia::Exposure::label_only);
    reports.push_back(mia::run_baseline_attack(oracle, data.split));
  } else if (which == "score") {
    mia::Oracle oracle = open_oracle(opts, mia::Exposure::scores);
    reports.push_back(mia::run_score_threshold_attack(oracle, data.split));
  } else if (which == "transfer") {
    mia::Oracle oracle = open_oracle(opts, mia::Exposure::label_only);
    mia::TransferConfig tcfg = cfg.transfer;
    tcfg.shadow_arch = data.arch;
    tcfg.shadow_train = cfg.train;
    tcfg.shadow_train.epochs = cfg.transfer.shadow_train.epochs;
    tcfg.shadow_train.seed = mia::mix_seed(cfg.seed, 0x7a0du);
    tcfg.workers = opts.workers;
    reports.push_back(mia::run_transfer_attack(oracle, data.split, tcfg));
  } else if (which == "boundary") {
    mia::Oracle oracle = open_oracle(opts, mia::Exposure::label_only);
    mia::BoundaryAttackConfig bcfg = cfg.boundary;
    bcfg.workers = opts.workers;
    reports.push_back(mia::run_boundary_attack(oracle, data.split, bcfg));
  } else {
    throw mia::ConfigError("unknown attack '" + which + "'");
  }
  write_reports(opts, reports);
  return 0;
}

int cmd_threshold_estimate(const GlobalOptions& opts) {
  mia::AuditConfig cfg = resolve_config(opts);
  mia::Oracle oracle = open_oracle(opts, mia::Exposure::label_only);
  double tau = mia::choose_threshold_random(oracle, cfg.boundary.threshold.probes,
                                            cfg.boundary.scheme, opts.workers);
  std::printf("tau=%.9g (probes=%d t=%.4g queries=%llu)\n", tau,
              cfg.boundary.threshold.probes.num_probes,
              cfg.boundary.threshold.probes.t_percentile,
              static_cast<unsigned long long>(oracle.queries_used()));
  return 0;
}

int cmd_certify(const GlobalOptions& opts, const std::string& shadow_path) {
  mia::AuditConfig cfg = resolve_config(opts);
  mia::MaterializedDataset data = mia::materialize_dataset(cfg);
  mia::Oracle target = open_oracle(opts, mia::Exposure::label_only);
  std::vector<mia::AcrReportRow> rows;
  if (!shadow_path.empty()) {
    auto shadow_model = std::make_shared<const mia::Model>(mia::load_model(shadow_path));
    mia::Oracle shadow = mia::make_local_oracle(shadow_model, mia::Exposure::label_only);
    rows = mia::acr_report(target, &shadow, data.split, cfg.smoothing, opts.workers);
  } else {
    rows = mia::acr_report(target, nullptr, data.split, cfg.smoothing, opts.workers);
  }
  for (const auto& r : rows) {
    std::printf("%-7s %-22s sigma=%.3g n=%d acr_member=%.5f acr_nonmember=%.5f gap=%.5f\n",
                r.model.c_str(), r.split.c_str(), r.sigma, r.num_samples, r.acr_member,
                r.acr_nonmember, r.gap);
  }
  if (!opts.out.empty()) {
    mia::write_acr_csv(rows, opts.out);
    std::printf("radius table written to %s\n", opts.out.c_str());
  }
  return 0;
}

int cmd_ladder(const GlobalOptions& opts, const std::string& attacks_csv) {
  mia::AuditConfig cfg = resolve_config(opts);
  mia::LadderConfig ladder = mia::ladder_from_config(cfg);
  std::vector<mia::AttackKind> attacks;
  std::stringstream ss(attacks_csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) attacks.push_back(mia::attack_from_name(name));
  }
  if (attacks.empty()) throw mia::ConfigError("ladder needs at least one attack");
  mia::AttackSuiteConfig suite = mia::default_attack_suite(ladder);
  suite.transfer.metric = cfg.transfer.metric;
  suite.transfer.threshold = cfg.transfer.threshold;
  suite.transfer.shadow_train.epochs = cfg.transfer.shadow_train.epochs;
  suite.boundary = cfg.boundary;
  mia::LadderOutcome outcome = mia::run_ladder(ladder, attacks, suite, opts.workers);
  for (const auto& c : outcome.cells) {
    std::printf("cell train_size=%-5d train_acc=%.4f test_acc=%.4f gap=%.4f\n",
                c.train_size, c.train_accuracy, c.test_accuracy, c.overfit_gap);
  }
  for (const auto& f : outcome.failures) {
    std::fprintf(stderr, "failed: %s\n", f.c_str());
  }
  write_reports(opts, outcome.reports);
  return outcome.failures.empty() ? 0 : 1;
}

int cmd_defense_matrix(const GlobalOptions& opts, const std::string& attacks_csv) {
  mia::AuditConfig cfg = resolve_config(opts);
  mia::LadderConfig ladder = mia::ladder_from_config(cfg);
  std::vector<mia::DefenseConfig> defenses = cfg.defenses;
  if (defenses.empty()) {
    defenses = {{mia::DefenseKind::none, 0.0},    {mia::DefenseKind::l2, 0.1},
                {mia::DefenseKind::l2, 0.05},     {mia::DefenseKind::l2, 0.01},
                {mia::DefenseKind::l1, 0.005},    {mia::DefenseKind::l1, 0.001},
                {mia::DefenseKind::l1, 0.0001},   {mia::DefenseKind::dropout, 0.9},
                {mia::DefenseKind::dropout, 0.8}, {mia::DefenseKind::dropout, 0.6},
                {mia::DefenseKind::grad_noise, 1.1}, {mia::DefenseKind::grad_noise, 0.5},
                {mia::DefenseKind::grad_noise, 0.1}, {mia::DefenseKind::augment_flip, 0.0}};
  }
  std::vector<mia::AttackKind> attacks;
  std::stringstream ss(attacks_csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) attacks.push_back(mia::attack_from_name(name));
  }
  if (attacks.empty()) throw mia::ConfigError("defense matrix needs at least one attack");
  mia::AttackSuiteConfig suite = mia::default_attack_suite(ladder);
  suite.boundary = cfg.boundary;
  auto cells = mia::run_defense_matrix(ladder, cfg.defense_train_size, defenses, attacks,
                                       suite, opts.workers);
  nlohmann::ordered_json doc = nlohmann::ordered_json::array();
  for (const auto& cell : cells) {
    nlohmann::ordered_json cj;
    cj["defense"] = {{"kind", static_cast<int>(cell.defense.kind)},
                     {"value", cell.defense.value}};
    cj["train_accuracy"] = cell.train_accuracy;
    cj["test_accuracy"] = cell.test_accuracy;
    nlohmann::ordered_json attacks_json = nlohmann::ordered_json::array();
    for (const auto& r : cell.reports) {
      attacks_json.push_back({{"attack", r.attack}, {"auc", r.auc}});
      std::printf("defense kind=%d value=%-7g %-28s auc=%.4f test_acc=%.4f\n",
                  static_cast<int>(cell.defense.kind), cell.defense.value,
                  r.attack.c_str(), r.auc, cell.test_accuracy);
    }
    cj["attacks"] = std::move(attacks_json);
    if (!cell.failure.empty()) cj["failure"] = cell.failure;
    doc.push_back(std::move(cj));
  }
  if (!opts.out.empty()) {
    std::ofstream out(opts.out);
    if (!out) throw mia::IoError("cannot write " + opts.out);
    out << doc.dump(2) << '\n';
    std::printf("matrix written to %s\n", opts.out.c_str());
  }
  return 0;
}

int cmd_sweep(const GlobalOptions& opts) {
  mia::AuditConfig cfg = resolve_config(opts);
  mia::MaterializedDataset data = mia::materialize_dataset(cfg);
  mia::Oracle oracle = open_oracle(opts, mia::Exposure::label_only);
  mia::EvalPairs pairs = mia::make_eval_pairs(data.split);
  auto curve = mia::query_budget_sweep(oracle, pairs, cfg.sweep_budgets,
                                       cfg.boundary.scheme, opts.workers);
  std::FILE* out = stdout;
  std::ofstream file;
  if (!opts.out.empty()) {
    file.open(opts.out);
    if (!file) throw mia::IoError("cannot write " + opts.out);
    file << "budget,auc\n";
  }
  for (const auto& p : curve) {
    std::fprintf(out, "budget=%-8llu auc=%.4f\n",
                 static_cast<unsigned long long>(p.budget), p.auc);
    if (file.is_open()) file << p.budget << ',' << p.auc << '\n';
  }
  if (file.is_open()) std::printf("curve written to %s\n", opts.out.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"label-only membership inference audit toolkit"};
  app.require_subcommand(1);

  GlobalOptions opts;
  app.add_option("--config", opts.config_path, "JSON experiment config");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override every seed in the config");
  app.add_option("--out", opts.out, "output path");
  app.add_option("--workers", opts.workers, "worker thread limit");

  auto* train_cmd = app.add_subcommand("train-target", "train a target model");
  std::string split_out;
  train_cmd->add_option("--split-out", split_out, "directory for train/test/shadow CSVs");

  auto* serve_cmd = app.add_subcommand("serve-oracle", "serve a checkpoint over HTTP");
  std::string host = "127.0.0.1";
  int port = 8787;
  std::string exposure = "label_only";
  serve_cmd->add_option("--model", opts.model_path, "model checkpoint")->required();
  serve_cmd->add_option("--host", host, "bind address");
  serve_cmd->add_option("--port", port, "bind port");
  serve_cmd->add_option("--exposure", exposure, "label_only or scores");

  auto* attack_cmd = app.add_subcommand("attack", "run one attack against an oracle");
  std::string attack_which;
  attack_cmd->add_option("kind", attack_which, "transfer|boundary|baseline|score")
      ->required();
  attack_cmd->add_option("--model", opts.model_path, "local model checkpoint");
  attack_cmd->add_option("--url", opts.url, "remote oracle base URL");
  attack_cmd->add_option("--format", opts.format, "json or csv");

  auto* threshold_cmd = app.add_subcommand("threshold", "threshold utilities");
  auto* estimate_cmd =
      threshold_cmd->add_subcommand("estimate", "percentile threshold from random probes");
  estimate_cmd->add_option("--model", opts.model_path, "local model checkpoint");
  estimate_cmd->add_option("--url", opts.url, "remote oracle base URL");

  auto* certify_cmd = app.add_subcommand("certify", "member/non-member radius gap");
  std::string shadow_path;
  certify_cmd->add_option("--model", opts.model_path, "target checkpoint");
  certify_cmd->add_option("--url", opts.url, "remote target oracle");
  certify_cmd->add_option("--shadow-model", shadow_path, "optional shadow checkpoint");

  auto* ladder_cmd = app.add_subcommand("ladder", "overfitting ladder audit");
  std::string attacks_csv = "baseline,score,transfer,boundary";
  ladder_cmd->add_option("--attacks", attacks_csv, "comma-separated attack list");
  ladder_cmd->add_option("--format", opts.format, "json or csv");

  auto* matrix_cmd = app.add_subcommand("defense-matrix", "defense sweep audit");
  std::string matrix_attacks = "baseline,boundary";
  matrix_cmd->add_option("--attacks", matrix_attacks, "comma-separated attack list");

  auto* sweep_cmd = app.add_subcommand("sweep-queries", "boundary AUC vs query budget");
  sweep_cmd->add_option("--model", opts.model_path, "local model checkpoint");
  sweep_cmd->add_option("--url", opts.url, "remote oracle base URL");

  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) opts.seed = seed_value;

  try {
    if (app.got_subcommand(train_cmd)) return cmd_train_target(opts, split_out);
    if (app.got_subcommand(serve_cmd)) return cmd_serve(opts, host, port, exposure);
    if (app.got_subcommand(attack_cmd)) return cmd_attack(opts, attack_which);
    if (app.got_subcommand(threshold_cmd)) return cmd_threshold_estimate(opts);
    if (app.got_subcommand(certify_cmd)) return cmd_certify(opts, shadow_path);
    if (app.got_subcommand(ladder_cmd)) return cmd_ladder(opts, attacks_csv);
    if (app.got_subcommand(matrix_cmd)) return cmd_defense_matrix(opts, matrix_attacks);
    if (app.got_subcommand(sweep_cmd)) return cmd_sweep(opts);
  } catch (const mia::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mia::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return 2;
  } catch (const mia::SizeError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const mia::TransportError& e) {
    std::fprintf(stderr, "oracle error: %s\n", e.what());
    return 3;
  } catch (const mia::BudgetError& e) {
    std::fprintf(stderr, "oracle error: %s\n", e.what());
    return 3;
  } catch (const mia::ExposureError& e) {
    std::fprintf(stderr, "oracle error: %s\n", e.what());
    return 3;
  } catch (const mia::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
