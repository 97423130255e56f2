#include "mia/boundary.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "mia/error.hpp"
#include "mia/parallel.hpp"
#include "mia/rng.hpp"

namespace mia {

namespace {

constexpr double kL0Tolerance = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string compact_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

double l2_between(const SampleVector& a, const SampleVector& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    double d = a.features[i] - b.features[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

SampleVector midpoint(const SampleVector& a, const SampleVector& b) {
  SampleVector m;
  m.features.resize(a.features.size());
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    m.features[i] = 0.5 * (a.features[i] + b.features[i]);
  }
  return m;
}

void clip_to_cube(std::vector<double>& v) {
  for (double& x : v) x = std::clamp(x, 0.0, 1.0);
}

// Budget-gated label access. Tracks the closest adversarial point seen,
// so every consumed query can only improve the estimate.
struct QueryMeter {
  QueryMeter(Oracle& oracle, const SampleVector& origin, std::uint64_t limit,
             bool record_trace)
      : oracle(oracle), origin(origin), limit(limit), record_trace(record_trace) {}

  Oracle& oracle;
  const SampleVector& origin;
  std::uint64_t limit;
  bool record_trace;
  std::uint64_t used = 0;
  int orig_label = -1;
  double best_l2 = kInf;
  std::optional<SampleVector> best_point;
  std::vector<TracePoint> trace;

  bool can() const { return used < limit; }

  int raw_label(const SampleVector& p) {
    ++used;
    return oracle.query_label(p);
  }

  bool adversarial(const SampleVector& p) {
    int l = raw_label(p);
    if (l == orig_label) return false;
    double d = l2_between(origin, p);
    if (d < best_l2) {
      best_l2 = d;
      best_point = p;
      if (record_trace) trace.push_back({used, d});
    }
    return true;
  }
};

struct BisectOutcome {
  SampleVector point;  // adversarial endpoint
  bool converged = false;
};

// lo is on the original-label side, hi on the adversarial side; shrinks
// the bracket until its width drops below the tolerance.
BisectOutcome bisect_segment(QueryMeter& meter, SampleVector lo, SampleVector hi,
                             double tol) {
  while (l2_between(lo, hi) > tol) {
    if (!meter.can()) return {std::move(hi), false};
    SampleVector mid = midpoint(lo, hi);
    if (meter.adversarial(mid)) hi = std::move(mid);
    else lo = std::move(mid);
  }
  return {std::move(hi), true};
}

PerturbationResult finish(QueryMeter& meter, const SampleVector& x,
                          PerturbationStatus status) {
  PerturbationResult r;
  r.original = x;
  r.queries_used = meter.used;
  r.status = status;
  r.trace = std::move(meter.trace);
  if (meter.best_point) {
    r.perturbed = std::move(meter.best_point);
    r.distances = lp_distance(x, *r.perturbed);
  } else {
    r.distances = {kInf, kInf, kInf, kInf};
  }
  return r;
}

PerturbationResult search_boundary(Oracle& oracle, const SampleVector& x,
                                   std::optional<int> label,
                                   const BoundarySchemeConfig& cfg) {
  cfg.validate();
  if (x.dim() != oracle.input_dim()) {
    throw ShapeError("candidate dim does not match the oracle");
  }
  QueryMeter meter{oracle, x, cfg.max_queries, cfg.record_trace};
  auto rng = seeded_rng(mix_seed(cfg.seed, 0xb0dauL));

  int observed = meter.raw_label(x);
  if (label && observed != *label) {
    PerturbationResult r;
    r.original = x;
    r.perturbed = x;
    r.distances = {};
    r.queries_used = meter.used;
    r.status = PerturbationStatus::already_misclassified;
    if (cfg.record_trace) r.trace.push_back({meter.used, 0.0});
    return r;
  }
  meter.orig_label = observed;

  // Any differently-labeled point to start from.
  std::optional<SampleVector> init;
  while (meter.can()) {
    SampleVector p{uniform_cube_point(rng, x.dim())};
    if (meter.adversarial(p)) {
      init = std::move(p);
      break;
    }
  }
  if (!init) return finish(meter, x, PerturbationStatus::budget_exhausted);

  BisectOutcome projected = bisect_segment(meter, x, *init, cfg.bin_tolerance);
  if (cfg.scheme == BoundaryScheme::simple_binary) {
    return finish(meter, x,
                  projected.converged ? PerturbationStatus::success
                                      : PerturbationStatus::budget_exhausted);
  }

  SampleVector working = std::move(projected.point);
  std::vector<double> direction(static_cast<std::size_t>(x.dim()));
  for (std::uint64_t t = 1; meter.can(); ++t) {
    double dist = l2_between(working, x);
    if (dist <= cfg.bin_tolerance) {
      return finish(meter, x, PerturbationStatus::success);
    }
    double radius = dist / std::sqrt(static_cast<double>(t));

    // Monte Carlo estimate of the boundary normal from label signs on a
    // sphere around the working point.
    std::fill(direction.begin(), direction.end(), 0.0);
    std::vector<std::vector<double>> probes;
    std::vector<double> signs;
    probes.reserve(static_cast<std::size_t>(cfg.grad_queries));
    for (int i = 0; i < cfg.grad_queries && meter.can(); ++i) {
      std::vector<double> u = unit_sphere_direction(rng, x.dim());
      SampleVector p;
      p.features.resize(u.size());
      for (std::size_t k = 0; k < u.size(); ++k) {
        p.features[k] = working.features[k] + radius * u[k];
      }
      clip_to_cube(p.features);
      signs.push_back(meter.adversarial(p) ? 1.0 : -1.0);
      probes.push_back(std::move(u));
    }
    if (probes.empty()) break;
    double mean_sign = 0.0;
    for (double s : signs) mean_sign += s;
    mean_sign /= static_cast<double>(signs.size());
    for (std::size_t i = 0; i < probes.size(); ++i) {
      double w = signs[i] - mean_sign;
      if (w == 0.0) continue;
      for (std::size_t k = 0; k < direction.size(); ++k) direction[k] += w * probes[i][k];
    }
    double norm = 0.0;
    for (double v : direction) norm += v * v;
    if (norm <= 0.0) {
      // Uninformative sphere (all probes agreed); fall back to the raw
      // sign average, else retry with the shrunken radius.
      std::fill(direction.begin(), direction.end(), 0.0);
      for (std::size_t i = 0; i < probes.size(); ++i) {
        for (std::size_t k = 0; k < direction.size(); ++k) {
          direction[k] += signs[i] * probes[i][k];
        }
      }
      norm = 0.0;
      for (double v : direction) norm += v * v;
      if (norm <= 0.0) continue;
    }
    double inv = 1.0 / std::sqrt(norm);
    for (double& v : direction) v *= inv;

    // Step into the adversarial side, then project back toward x.
    double step = dist / std::sqrt(static_cast<double>(t));
    std::optional<SampleVector> stepped;
    while (step > cfg.bin_tolerance / 4.0 && meter.can()) {
      SampleVector cand;
      cand.features.resize(direction.size());
      for (std::size_t k = 0; k < direction.size(); ++k) {
        cand.features[k] = working.features[k] + step * direction[k];
      }
      clip_to_cube(cand.features);
      if (meter.adversarial(cand)) {
        stepped = std::move(cand);
        break;
      }
      step *= 0.5;
    }
    if (!stepped) continue;
    BisectOutcome refined = bisect_segment(meter, x, *stepped, cfg.bin_tolerance);
    working = std::move(refined.point);
  }
  return finish(meter, x, PerturbationStatus::budget_exhausted);
}

}  // namespace

std::string lp_name(LpMetric p) {
  switch (p) {
    case LpMetric::l0: return "l0";
    case LpMetric::l1: return "l1";
    case LpMetric::l2: return "l2";
    case LpMetric::linf: return "linf";
  }
  return "l2";
}

LpMetric lp_from_name(const std::string& name) {
  if (name == "l0") return LpMetric::l0;
  if (name == "l1") return LpMetric::l1;
  if (name == "l2") return LpMetric::l2;
  if (name == "linf") return LpMetric::linf;
  throw ConfigError("unknown Lp metric '" + name + "'");
}

double Distances::get(LpMetric p) const {
  switch (p) {
    case LpMetric::l0: return l0;
    case LpMetric::l1: return l1;
    case LpMetric::l2: return l2;
    case LpMetric::linf: return linf;
  }
  return l2;
}

Distances lp_distance(const SampleVector& a, const SampleVector& b) {
  if (a.dim() != b.dim()) throw ShapeError("lp_distance over mismatched dims");
  Distances d;
  double sq = 0.0;
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    double diff = std::abs(a.features[i] - b.features[i]);
    if (diff > kL0Tolerance) d.l0 += 1.0;
    d.l1 += diff;
    sq += diff * diff;
    d.linf = std::max(d.linf, diff);
  }
  d.l2 = std::sqrt(sq);
  return d;
}

std::string boundary_scheme_name(BoundaryScheme s) {
  return s == BoundaryScheme::simple_binary ? "simple_binary" : "hsj_style";
}

BoundaryScheme boundary_scheme_from_name(const std::string& name) {
  if (name == "simple_binary") return BoundaryScheme::simple_binary;
  if (name == "hsj_style") return BoundaryScheme::hsj_style;
  throw ConfigError("unknown boundary scheme '" + name + "'");
}

void BoundarySchemeConfig::validate() const {
  if (max_queries < 1) throw ConfigError("max_queries must be at least 1");
  if (!(bin_tolerance > 0.0)) throw ConfigError("bisection tolerance must be positive");
  if (grad_queries < 1) throw ConfigError("grad_queries must be at least 1");
}

void RandomProbeConfig::validate() const {
  if (num_probes < 1) throw ConfigError("num_probes must be at least 1");
  if (!(t_percentile >= 0.0 && t_percentile <= 100.0)) {
    throw ConfigError("t percentile must be in [0,100]");
  }
  if (distribution == ProbeDistribution::gaussian && !(gaussian_stddev > 0.0)) {
    throw ConfigError("gaussian probe stddev must be positive");
  }
}

PerturbationResult distance_to_boundary(Oracle& oracle, const SampleVector& x, int label,
                                        const BoundarySchemeConfig& cfg) {
  return search_boundary(oracle, x, label, cfg);
}

std::vector<double> random_probe_perturbations(Oracle& oracle,
                                               const RandomProbeConfig& probes,
                                               const BoundarySchemeConfig& cfg,
                                               int workers) {
  probes.validate();
  cfg.validate();
  std::vector<double> q(static_cast<std::size_t>(probes.num_probes), kInf);
  parallel_for(q.size(), workers, [&](std::size_t i) {
    auto rng = seeded_rng(mix_seed(cfg.seed, 0x9e0bu, i));
    SampleVector probe;
    if (probes.distribution == ProbeDistribution::uniform) {
      probe.features = uniform_cube_point(rng, oracle.input_dim());
    } else {
      probe.features = gaussian_vector(rng, oracle.input_dim(), probes.gaussian_stddev);
      for (double& v : probe.features) v = std::clamp(v + probes.gaussian_mean, 0.0, 1.0);
    }
    BoundarySchemeConfig probe_cfg = cfg;
    probe_cfg.seed = mix_seed(cfg.seed, 0xd157u, i);
    probe_cfg.record_trace = false;
    PerturbationResult r = search_boundary(oracle, probe, std::nullopt, probe_cfg);
    q[i] = r.distances.l2;
  });
  return q;
}

double choose_threshold_random(Oracle& oracle, const RandomProbeConfig& probes,
                               const BoundarySchemeConfig& cfg, int workers) {
  std::vector<double> q = random_probe_perturbations(oracle, probes, cfg, workers);
  bool any_finite = std::any_of(q.begin(), q.end(), [](double v) { return std::isfinite(v); });
  if (!any_finite) {
    throw EstimationError("no probe produced a finite perturbation within budget");
  }
  return descending_percentile(std::move(q), probes.t_percentile);
}

bool infer_membership_boundary(const PerturbationResult& result, double tau, LpMetric p) {
  if (tau < 0.0) throw ConfigError("threshold must be non-negative");
  return result.distances.get(p) > tau;
}

bool baseline_attack(Oracle& oracle, const SampleVector& x, int label) {
  return oracle.query_label(x) == label;
}

AttackScore score_threshold_attack(Oracle& oracle, const SampleVector& x, int label) {
  std::vector<double> p = oracle.query_scores(x);
  if (label < 0 || label >= static_cast<int>(p.size())) {
    throw ConfigError("label outside the class range");
  }
  double loss = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-12));
  return {loss, Orientation::lower_means_member};
}

namespace {

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

void finalize_metrics(AuditReport& report, const std::vector<double>& member_scores,
                      const std::vector<double>& nonmember_scores, Orientation orientation,
                      bool with_f1) {
  report.auc = auc(member_scores, nonmember_scores, orientation);
  if (with_f1) {
    std::vector<std::pair<bool, bool>> verdicts;
    verdicts.reserve(report.samples.size());
    for (const auto& s : report.samples) verdicts.emplace_back(s.verdict, s.is_member);
    report.f1 = f1_score(verdicts);
  }
}

}  // namespace

AuditReport run_boundary_attack(Oracle& oracle, const DatasetSplit& split,
                                const BoundaryAttackConfig& cfg) {
  Timer timer;
  std::uint64_t queries_before = oracle.queries_used();

  ThresholdInfo threshold;
  if (cfg.threshold.mode == BoundaryThresholdRule::Mode::fixed) {
    threshold.set = true;
    threshold.value = cfg.threshold.fixed_value;
    threshold.provenance = "fixed";
  } else if (cfg.threshold.mode == BoundaryThresholdRule::Mode::random_probes) {
    BoundarySchemeConfig probe_cfg = cfg.scheme;
    probe_cfg.seed = mix_seed(cfg.scheme.seed, 0x0b5eu);
    threshold.set = true;
    threshold.value = choose_threshold_random(oracle, cfg.threshold.probes, probe_cfg,
                                              cfg.workers);
    threshold.provenance =
        "random_probes_t" + compact_number(cfg.threshold.probes.t_percentile);
  }

  EvalPairs pairs = make_eval_pairs(split);
  std::vector<const LabeledSample*> candidates;
  candidates.reserve(pairs.members.size() + pairs.nonmembers.size());
  for (const auto& s : pairs.members) candidates.push_back(&s);
  for (const auto& s : pairs.nonmembers) candidates.push_back(&s);

  std::vector<PerturbationResult> results(candidates.size());
  parallel_for(candidates.size(), cfg.workers, [&](std::size_t i) {
    BoundarySchemeConfig per = cfg.scheme;
    per.seed = mix_seed(cfg.scheme.seed, 0xca4du, i);
    results[i] = search_boundary(oracle, candidates[i]->x, candidates[i]->label, per);
  });

  AuditReport report;
  report.attack = "boundary_" + boundary_scheme_name(cfg.scheme.scheme) + "_" +
                  lp_name(cfg.metric);
  report.model_id = oracle.id();
  report.dataset_digest = split_digest(split);
  report.threshold = threshold;
  report.members_evaluated = static_cast<int>(pairs.members.size());
  report.nonmembers_evaluated = static_cast<int>(pairs.nonmembers.size());
  report.eval_subsampled = pairs.subsampled;

  std::vector<double> member_scores, nonmember_scores;
  int exhausted = 0, preflipped = 0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    bool is_member = i < pairs.members.size();
    double value = results[i].distances.get(cfg.metric);
    bool verdict = threshold.set && infer_membership_boundary(results[i], threshold.value,
                                                              cfg.metric);
    report.samples.push_back({value, verdict, is_member});
    (is_member ? member_scores : nonmember_scores).push_back(value);
    if (results[i].status == PerturbationStatus::budget_exhausted) ++exhausted;
    if (results[i].status == PerturbationStatus::already_misclassified) ++preflipped;
  }
  finalize_metrics(report, member_scores, nonmember_scores,
                   Orientation::higher_means_member, threshold.set);
  if (exhausted > 0 || preflipped > 0) {
    report.note = std::to_string(exhausted) + " budget_exhausted, " +
                  std::to_string(preflipped) + " already_misclassified";
  }
  report.target_queries = oracle.queries_used() - queries_before;
  report.wall_clock_seconds = timer.seconds();
  return report;
}

AuditReport run_baseline_attack(Oracle& oracle, const DatasetSplit& split) {
  Timer timer;
  std::uint64_t queries_before = oracle.queries_used();
  EvalPairs pairs = make_eval_pairs(split);

  AuditReport report;
  report.attack = "baseline";
  report.model_id = oracle.id();
  report.dataset_digest = split_digest(split);
  report.threshold = {true, 0.0, "correctness"};
  report.members_evaluated = static_cast<int>(pairs.members.size());
  report.nonmembers_evaluated = static_cast<int>(pairs.nonmembers.size());
  report.eval_subsampled = pairs.subsampled;

  std::vector<double> member_scores, nonmember_scores;
  auto run_side = [&](const std::vector<LabeledSample>& side, bool is_member,
                      std::vector<double>& bucket) {
    for (const auto& s : side) {
      bool member_verdict = baseline_attack(oracle, s.x, s.label);
      double score = member_verdict ? 1.0 : 0.0;
      bucket.push_back(score);
      report.samples.push_back({score, member_verdict, is_member});
    }
  };
  run_side(pairs.members, true, member_scores);
  run_side(pairs.nonmembers, false, nonmember_scores);

  finalize_metrics(report, member_scores, nonmember_scores,
                   Orientation::higher_means_member, true);
  report.target_queries = oracle.queries_used() - queries_before;
  report.wall_clock_seconds = timer.seconds();
  return report;
}

AuditReport run_score_threshold_attack(Oracle& oracle, const DatasetSplit& split,
                                       std::optional<double> tau) {
  Timer timer;
  std::uint64_t queries_before = oracle.queries_used();
  EvalPairs pairs = make_eval_pairs(split);

  AuditReport report;
  report.attack = "score_threshold";
  report.model_id = oracle.id();
  report.dataset_digest = split_digest(split);
  if (tau) report.threshold = {true, *tau, "fixed"};
  report.members_evaluated = static_cast<int>(pairs.members.size());
  report.nonmembers_evaluated = static_cast<int>(pairs.nonmembers.size());
  report.eval_subsampled = pairs.subsampled;

  std::vector<double> member_scores, nonmember_scores;
  auto run_side = [&](const std::vector<LabeledSample>& side, bool is_member,
                      std::vector<double>& bucket) {
    for (const auto& s : side) {
      AttackScore score = score_threshold_attack(oracle, s.x, s.label);
      bool verdict = tau.has_value() && member_side(score, *tau);
      bucket.push_back(score.value);
      report.samples.push_back({score.value, verdict, is_member});
    }
  };
  run_side(pairs.members, true, member_scores);
  run_side(pairs.nonmembers, false, nonmember_scores);

  finalize_metrics(report, member_scores, nonmember_scores,
                   Orientation::lower_means_member, tau.has_value());
  report.target_queries = oracle.queries_used() - queries_before;
  report.wall_clock_seconds = timer.seconds();
  return report;
}

}  // namespace mia
