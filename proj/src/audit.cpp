#include "mia/audit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mia/error.hpp"
#include "mia/parallel.hpp"
#include "mia/rng.hpp"

namespace mia {

void LadderConfig::validate() const {
  if (train_sizes.empty()) throw ConfigError("ladder needs at least one train size");
  for (std::size_t i = 1; i < train_sizes.size(); ++i) {
    if (train_sizes[i] >= train_sizes[i - 1]) {
      throw ConfigError("ladder train sizes must be strictly decreasing");
    }
  }
  if (train_sizes.back() < 1) throw ConfigError("ladder train sizes must be positive");
  if (test_size < 1) throw ConfigError("ladder test size must be positive");
  if (shadow_size < 0) throw ConfigError("ladder shadow size must be non-negative");
  arch.validate();
  train.validate();
}

std::vector<LabeledSample> ladder_corpus(const LadderConfig& cfg) {
  cfg.validate();
  BlobConfig blob = cfg.blob;
  if (blob.count == 0) {
    blob.count = cfg.train_sizes.front() + cfg.test_size + cfg.shadow_size;
  }
  int needed = cfg.train_sizes.front() + cfg.test_size + cfg.shadow_size;
  if (blob.count < needed) {
    throw ConfigError("blob count " + std::to_string(blob.count) +
                      " cannot cover the ladder split " + std::to_string(needed));
  }
  return generate_blobs(blob);
}

LadderCell build_ladder_cell(const LadderConfig& cfg,
                             const std::vector<LabeledSample>& corpus, int train_size,
                             std::size_t cell_index) {
  LadderCell cell;
  cell.train_size = train_size;
  cell.split = split_dataset(corpus, {train_size, cfg.test_size, cfg.shadow_size},
                             mix_seed(cfg.seed, 0xce11u, cell_index));
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = mix_seed(cfg.seed, 0x03a1u, cell_index);
  Model model = train(cfg.arch, cell.split.train, train_cfg);
  record_generalization(model, cell.split.test);
  cell.model = std::make_shared<const Model>(std::move(model));
  return cell;
}

std::string attack_name(AttackKind kind) {
  switch (kind) {
    case AttackKind::baseline: return "baseline";
    case AttackKind::score_threshold: return "score";
    case AttackKind::transfer: return "transfer";
    case AttackKind::boundary: return "boundary";
  }
  return "baseline";
}

AttackKind attack_from_name(const std::string& name) {
  if (name == "baseline") return AttackKind::baseline;
  if (name == "score" || name == "score_threshold") return AttackKind::score_threshold;
  if (name == "transfer") return AttackKind::transfer;
  if (name == "boundary") return AttackKind::boundary;
  throw ConfigError("unknown attack '" + name + "'");
}

AttackSuiteConfig default_attack_suite(const LadderConfig& cfg) {
  AttackSuiteConfig suite;
  suite.transfer.shadow_arch = cfg.arch;
  suite.transfer.shadow_train = cfg.train;
  suite.transfer.metric = Metric::loss;
  suite.boundary.scheme = BoundarySchemeConfig{};
  suite.boundary.metric = LpMetric::l2;
  return suite;
}

namespace {

AuditReport run_one_attack(AttackKind kind, const LadderCell& cell,
                           const AttackSuiteConfig& suite, std::uint64_t seed_tag) {
  switch (kind) {
    case AttackKind::baseline: {
      Oracle oracle = make_local_oracle(cell.model, Exposure::label_only);
      return run_baseline_attack(oracle, cell.split);
    }
    case AttackKind::score_threshold: {
      Oracle oracle = make_local_oracle(cell.model, Exposure::scores);
      return run_score_threshold_attack(oracle, cell.split);
    }
    case AttackKind::transfer: {
      Oracle oracle = make_local_oracle(cell.model, Exposure::label_only);
      TransferConfig cfg = suite.transfer;
      cfg.shadow_train.seed = mix_seed(seed_tag, 0x7a0du);
      cfg.workers = 1;
      return run_transfer_attack(oracle, cell.split, cfg);
    }
    case AttackKind::boundary: {
      Oracle oracle = make_local_oracle(cell.model, Exposure::label_only);
      BoundaryAttackConfig cfg = suite.boundary;
      cfg.scheme.seed = mix_seed(seed_tag, 0xb0b0u);
      cfg.workers = 1;
      return run_boundary_attack(oracle, cell.split, cfg);
    }
  }
  throw ConfigError("unknown attack kind");
}

}  // namespace

LadderOutcome run_ladder(const LadderConfig& cfg, const std::vector<AttackKind>& attacks,
                         const AttackSuiteConfig& suite, int workers) {
  cfg.validate();
  std::vector<LabeledSample> corpus = ladder_corpus(cfg);

  struct CellSlot {
    std::vector<AuditReport> reports;
    std::vector<std::string> failures;
    LadderOutcome::CellSummary summary;
    bool built = false;
  };
  std::vector<CellSlot> slots(cfg.train_sizes.size());

  parallel_for(cfg.train_sizes.size(), workers, [&](std::size_t i) {
    CellSlot& slot = slots[i];
    LadderCell cell;
    try {
      cell = build_ladder_cell(cfg, corpus, cfg.train_sizes[i], i);
    } catch (const std::exception& e) {
      slot.failures.push_back("cell train_size=" + std::to_string(cfg.train_sizes[i]) +
                              ": " + e.what());
      return;
    }
    slot.built = true;
    slot.summary = {cell.train_size, cell.model->meta.train_accuracy,
                    cell.model->meta.test_accuracy, cell.model->meta.overfit_gap};
    for (AttackKind kind : attacks) {
      try {
        slot.reports.push_back(
            run_one_attack(kind, cell, suite, mix_seed(cfg.seed, 0xa77au, i)));
      } catch (const std::exception& e) {
        slot.failures.push_back("cell train_size=" + std::to_string(cfg.train_sizes[i]) +
                                " attack=" + attack_name(kind) + ": " + e.what());
      }
    }
  });

  LadderOutcome out;
  for (auto& slot : slots) {
    if (slot.built) out.cells.push_back(slot.summary);
    for (auto& r : slot.reports) out.reports.push_back(std::move(r));
    for (auto& f : slot.failures) out.failures.push_back(std::move(f));
  }
  return out;
}

std::vector<DefenseCell> run_defense_matrix(const LadderConfig& base, int train_size,
                                            const std::vector<DefenseConfig>& defenses,
                                            const std::vector<AttackKind>& attacks,
                                            const AttackSuiteConfig& suite, int workers) {
  base.validate();
  if (defenses.empty()) throw ConfigError("defense matrix needs at least one setting");
  std::vector<LabeledSample> corpus = ladder_corpus(base);
  // Shared split and training seed: only the defense differs per cell.
  DatasetSplit split = split_dataset(corpus, {train_size, base.test_size, base.shadow_size},
                                     mix_seed(base.seed, 0xdef0u));

  std::vector<DefenseCell> cells(defenses.size());
  parallel_for(defenses.size(), workers, [&](std::size_t i) {
    DefenseCell& cell = cells[i];
    cell.defense = defenses[i];
    try {
      TrainConfig train_cfg = base.train;
      train_cfg.seed = mix_seed(base.seed, 0xdef1u);
      train_cfg.defense = defenses[i];
      Model model = train(base.arch, split.train, train_cfg);
      record_generalization(model, split.test);
      cell.train_accuracy = model.meta.train_accuracy;
      cell.test_accuracy = model.meta.test_accuracy;
      LadderCell wrapped{train_size, split, std::make_shared<const Model>(std::move(model))};
      for (AttackKind kind : attacks) {
        cell.reports.push_back(
            run_one_attack(kind, wrapped, suite, mix_seed(base.seed, 0xdef2u)));
      }
    } catch (const std::exception& e) {
      cell.failure = e.what();
    }
  });
  return cells;
}

double distance_at_budget(const PerturbationResult& result, std::uint64_t budget) {
  if (result.status == PerturbationStatus::already_misclassified) {
    return budget >= result.queries_used ? 0.0 : std::numeric_limits<double>::infinity();
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& point : result.trace) {
    if (point.queries > budget) break;
    best = point.l2;
  }
  return best;
}

std::vector<PerturbationResult> measure_boundary_distances(
    Oracle& oracle, const std::vector<LabeledSample>& candidates,
    const BoundarySchemeConfig& cfg, int workers) {
  std::vector<PerturbationResult> results(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t i) {
    BoundarySchemeConfig per = cfg;
    per.seed = mix_seed(cfg.seed, 0xca4du, i);
    results[i] = distance_to_boundary(oracle, candidates[i].x, candidates[i].label, per);
  });
  return results;
}

std::vector<SweepPoint> query_budget_sweep(Oracle& oracle, const EvalPairs& pairs,
                                           const std::vector<std::uint64_t>& budgets,
                                           const BoundarySchemeConfig& cfg, int workers) {
  if (budgets.empty()) throw ConfigError("query sweep needs budgets");
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (budgets[i] <= budgets[i - 1]) throw ConfigError("budgets must be ascending");
  }
  if (budgets.front() < 1) throw ConfigError("budgets must be positive");

  BoundarySchemeConfig full = cfg;
  full.max_queries = budgets.back();
  full.record_trace = true;

  std::vector<LabeledSample> candidates;
  candidates.reserve(pairs.members.size() + pairs.nonmembers.size());
  candidates.insert(candidates.end(), pairs.members.begin(), pairs.members.end());
  candidates.insert(candidates.end(), pairs.nonmembers.begin(), pairs.nonmembers.end());
  std::vector<PerturbationResult> results =
      measure_boundary_distances(oracle, candidates, full, workers);

  std::vector<SweepPoint> curve;
  curve.reserve(budgets.size());
  for (std::uint64_t budget : budgets) {
    std::vector<double> member_scores, nonmember_scores;
    for (std::size_t i = 0; i < results.size(); ++i) {
      double d = distance_at_budget(results[i], budget);
      (i < pairs.members.size() ? member_scores : nonmember_scores).push_back(d);
    }
    curve.push_back({budget, auc(member_scores, nonmember_scores,
                                 Orientation::higher_means_member)});
  }
  return curve;
}

std::vector<ThresholdSweepPoint> threshold_sweep_f1(
    const std::vector<double>& probe_perturbations,
    const std::vector<double>& candidate_distances, const std::vector<bool>& is_member,
    const std::vector<double>& t_grid) {
  if (probe_perturbations.empty()) throw ConfigError("threshold sweep needs probes");
  if (candidate_distances.size() != is_member.size() || candidate_distances.empty()) {
    throw ConfigError("threshold sweep needs matching candidate distances and truths");
  }
  std::vector<ThresholdSweepPoint> curve;
  curve.reserve(t_grid.size());
  for (double t : t_grid) {
    double tau = descending_percentile(probe_perturbations, t);
    std::vector<std::pair<bool, bool>> verdicts;
    verdicts.reserve(candidate_distances.size());
    for (std::size_t i = 0; i < candidate_distances.size(); ++i) {
      verdicts.emplace_back(candidate_distances[i] > tau, is_member[i]);
    }
    curve.push_back({t, tau, f1_score(verdicts)});
  }
  return curve;
}

}  // namespace mia
