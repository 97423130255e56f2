#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mia/data.hpp"
#include "mia/oracle.hpp"
#include "mia/report.hpp"
#include "mia/transfer.hpp"

namespace mia {

enum class LpMetric { l0, l1, l2, linf };

std::string lp_name(LpMetric p);
LpMetric lp_from_name(const std::string& name);

struct Distances {
  double l0 = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;

  double get(LpMetric p) const;
};

// L0 counts coordinates differing by more than 1e-9.
Distances lp_distance(const SampleVector& a, const SampleVector& b);

enum class BoundaryScheme { simple_binary, hsj_style };

std::string boundary_scheme_name(BoundaryScheme s);
BoundaryScheme boundary_scheme_from_name(const std::string& name);

struct BoundarySchemeConfig {
  BoundaryScheme scheme = BoundaryScheme::hsj_style;
  std::uint64_t max_queries = 2000;
  double bin_tolerance = 1e-3;  // L2 width at which the segment search stops
  int grad_queries = 40;        // sign probes per normal-direction estimate
  std::uint64_t seed = 0;
  bool record_trace = false;

  void validate() const;
};

enum class PerturbationStatus { success, budget_exhausted, already_misclassified };

struct TracePoint {
  std::uint64_t queries = 0;
  double l2 = 0.0;
};

// Outcome of one decision-change search. On success the perturbed point
// carries a different oracle label than the original; with no adversarial
// point found all distances are +infinity.
struct PerturbationResult {
  SampleVector original;
  std::optional<SampleVector> perturbed;
  Distances distances;
  std::uint64_t queries_used = 0;
  PerturbationStatus status = PerturbationStatus::success;
  std::vector<TracePoint> trace;  // best-so-far L2 after each improvement
};

// Label-only estimate of the distance from x to the oracle's decision
// boundary: find any differently-labeled point, project onto the segment
// by bisection, then (hsj_style) alternate Monte Carlo normal estimation,
// a geometric step, and re-projection, keeping the closest adversarial
// point seen. Untargeted; every probe stays inside [0,1]^d.
PerturbationResult distance_to_boundary(Oracle& oracle, const SampleVector& x, int label,
                                        const BoundarySchemeConfig& cfg);

enum class ProbeDistribution { uniform, gaussian };

struct RandomProbeConfig {
  int num_probes = 100;
  double t_percentile = 50.0;
  ProbeDistribution distribution = ProbeDistribution::uniform;
  double gaussian_mean = 0.5;    // used by the gaussian option only
  double gaussian_stddev = 0.25;

  void validate() const;
};

// L2 perturbation sizes of random probe points, treated as non-members
// and labeled by the oracle itself. May contain +infinity for probes the
// budget could not break.
std::vector<double> random_probe_perturbations(Oracle& oracle,
                                               const RandomProbeConfig& probes,
                                               const BoundarySchemeConfig& cfg,
                                               int workers = 1);

// Draws random points, treats them as non-members, measures their
// perturbation sizes, sorts descending and returns the value at the
// t-th percentile (t=0 -> maximum, t=100 -> minimum).
double choose_threshold_random(Oracle& oracle, const RandomProbeConfig& probes,
                               const BoundarySchemeConfig& cfg, int workers = 1);

// Member iff the measured perturbation exceeds tau; +infinity always
// lands on the member side, zero never does.
bool infer_membership_boundary(const PerturbationResult& result, double tau, LpMetric p);

// Member iff the oracle classifies the candidate correctly; one query.
bool baseline_attack(Oracle& oracle, const SampleVector& x, int label);

// Loss signal straight from the target's own scores; requires a
// score-exposing oracle.
AttackScore score_threshold_attack(Oracle& oracle, const SampleVector& x, int label);

struct BoundaryThresholdRule {
  enum class Mode { none, fixed, random_probes };
  Mode mode = Mode::random_probes;
  double fixed_value = 0.0;
  RandomProbeConfig probes;
};

struct BoundaryAttackConfig {
  BoundarySchemeConfig scheme;
  LpMetric metric = LpMetric::l2;
  BoundaryThresholdRule threshold;
  int workers = 1;
};

// Per-candidate searches with RNG streams derived from (seed, index);
// reports AUC on the perturbation size and verdicts at the threshold.
AuditReport run_boundary_attack(Oracle& oracle, const DatasetSplit& split,
                                const BoundaryAttackConfig& cfg);

AuditReport run_baseline_attack(Oracle& oracle, const DatasetSplit& split);

AuditReport run_score_threshold_attack(Oracle& oracle, const DatasetSplit& split,
                                       std::optional<double> tau = std::nullopt);

}  // namespace mia
