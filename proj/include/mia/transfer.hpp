#pragma once

#include <cstdint>
#include <vector>

#include "mia/data.hpp"
#include "mia/metrics.hpp"
#include "mia/model.hpp"
#include "mia/oracle.hpp"
#include "mia/report.hpp"

namespace mia {

// Membership signal computed on the shadow model.
enum class Metric { loss, max_confidence, normalized_entropy };

std::string metric_name(Metric m);
Metric metric_from_name(const std::string& name);
Orientation metric_orientation(Metric m);

struct AttackScore {
  double value = 0.0;
  Orientation orientation = Orientation::lower_means_member;
};

// How the decision threshold is obtained.
struct ThresholdRule {
  enum class Mode { fixed, shadow_estimated };
  Mode mode = Mode::shadow_estimated;
  double fixed_value = 0.0;
  double holdout_fraction = 0.2;  // shadow tail reserved as non-member stand-ins
  double percentile = 50.0;

  void validate() const;
};

struct TransferConfig {
  MlpArchitecture shadow_arch;  // defaults to the target's family
  TrainConfig shadow_train;
  Metric metric = Metric::loss;
  ThresholdRule threshold;
  int workers = 1;
};

// Replaces every label with the oracle's prediction; consumes exactly
// |shadow| queries. Queries may fan out over `workers` threads.
std::vector<LabeledSample> relabel(Oracle& oracle, const std::vector<LabeledSample>& shadow,
                                   int workers = 1);

Model train_shadow(const TransferConfig& cfg, const std::vector<LabeledSample>& relabeled);

// loss = -log p_y; max_confidence = max_i p_i; normalized_entropy =
// -(1/log K) sum p_i log p_i. Probabilities are floored at 1e-12 inside
// the logarithms only.
AttackScore score_sample(const Model& shadow, const SampleVector& x, int label, Metric metric);

// Mean cross entropy of the scores against every label other than the
// predicted one.
double ace(const std::vector<double>& scores, int predicted);

// Scores the holdout as non-members and returns the requested percentile
// (ascending, linear interpolation).
double estimate_threshold_shadow(const Model& shadow,
                                 const std::vector<LabeledSample>& holdout, Metric metric,
                                 double percentile);

// Relabel -> shadow train -> score the evaluation pairs -> AUC and
// thresholded verdicts. No target queries are spent on candidates.
AuditReport run_transfer_attack(Oracle& oracle, const DatasetSplit& split,
                                const TransferConfig& cfg);

bool member_side(const AttackScore& score, double tau);

}  // namespace mia
