#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mia/boundary.hpp"
#include "mia/data.hpp"
#include "mia/model.hpp"
#include "mia/report.hpp"
#include "mia/transfer.hpp"

namespace mia {

// Overfitting ladder: one target model per training-set size, sizes
// strictly decreasing so overfitting grows along the list.
struct LadderConfig {
  BlobConfig blob{4, 20, {}, 0.2, 0, 0};
  std::vector<int> train_sizes{400, 200, 100, 50, 25, 12};
  int test_size = 200;
  int shadow_size = 2000;
  MlpArchitecture arch{20, {64, 64}, 4};
  TrainConfig train;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LadderCell {
  int train_size = 0;
  DatasetSplit split;
  std::shared_ptr<const Model> model;
};

std::vector<LabeledSample> ladder_corpus(const LadderConfig& cfg);

LadderCell build_ladder_cell(const LadderConfig& cfg,
                             const std::vector<LabeledSample>& corpus, int train_size,
                             std::size_t cell_index);

enum class AttackKind { baseline, score_threshold, transfer, boundary };

std::string attack_name(AttackKind kind);
AttackKind attack_from_name(const std::string& name);

struct AttackSuiteConfig {
  TransferConfig transfer;
  BoundaryAttackConfig boundary;
};

// Transfer shadow uses the target's architecture family and training
// recipe; boundary defaults come from BoundaryAttackConfig.
AttackSuiteConfig default_attack_suite(const LadderConfig& cfg);

struct LadderOutcome {
  std::vector<AuditReport> reports;  // one per (cell, attack), cell-major
  std::vector<std::string> failures;
  struct CellSummary {
    int train_size = 0;
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    double overfit_gap = 0.0;
  };
  std::vector<CellSummary> cells;
};

// Trains every ladder model and runs the requested attacks on equal
// member/non-member sets. A failing cell is reported and skipped; the
// others proceed.
LadderOutcome run_ladder(const LadderConfig& cfg, const std::vector<AttackKind>& attacks,
                         const AttackSuiteConfig& suite, int workers = 1);

struct DefenseCell {
  DefenseConfig defense;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::vector<AuditReport> reports;
  std::string failure;
};

// One model per defense setting on a fixed split (shared seed, so a
// zero-strength defense reproduces the undefended model exactly), each
// evaluated with the requested attacks.
std::vector<DefenseCell> run_defense_matrix(const LadderConfig& base, int train_size,
                                            const std::vector<DefenseConfig>& defenses,
                                            const std::vector<AttackKind>& attacks,
                                            const AttackSuiteConfig& suite,
                                            int workers = 1);

struct SweepPoint {
  std::uint64_t budget = 0;
  double auc = 0.0;
};

// Boundary-attack AUC as a function of the per-candidate query budget.
// Candidates are searched once at the largest budget; smaller budgets
// reuse the recorded best-so-far trace, which matches a fresh run at
// that budget because the search never looks at its own limit.
std::vector<SweepPoint> query_budget_sweep(Oracle& oracle, const EvalPairs& pairs,
                                           const std::vector<std::uint64_t>& budgets,
                                           const BoundarySchemeConfig& cfg,
                                           int workers = 1);

double distance_at_budget(const PerturbationResult& result, std::uint64_t budget);

struct ThresholdSweepPoint {
  double t = 0.0;
  double tau = 0.0;
  double f1 = 0.0;
};

// F1 over the percentile grid, thresholds taken from the probe
// perturbations by the descending-percentile rule.
std::vector<ThresholdSweepPoint> threshold_sweep_f1(
    const std::vector<double>& probe_perturbations,
    const std::vector<double>& candidate_distances, const std::vector<bool>& is_member,
    const std::vector<double>& t_grid);

// Per-candidate boundary searches, seeds derived from (cfg.seed, index).
std::vector<PerturbationResult> measure_boundary_distances(
    Oracle& oracle, const std::vector<LabeledSample>& candidates,
    const BoundarySchemeConfig& cfg, int workers = 1);

}  // namespace mia
