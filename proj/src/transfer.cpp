#include "mia/transfer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "mia/error.hpp"
#include "mia/parallel.hpp"

namespace mia {

namespace {

constexpr double kProbFloor = 1e-12;

std::string compact_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::loss: return "loss";
    case Metric::max_confidence: return "max_confidence";
    case Metric::normalized_entropy: return "normalized_entropy";
  }
  return "loss";
}

Metric metric_from_name(const std::string& name) {
  if (name == "loss") return Metric::loss;
  if (name == "max_confidence") return Metric::max_confidence;
  if (name == "normalized_entropy") return Metric::normalized_entropy;
  throw ConfigError("unknown metric '" + name + "'");
}

Orientation metric_orientation(Metric m) {
  return m == Metric::max_confidence ? Orientation::higher_means_member
                                     : Orientation::lower_means_member;
}

void ThresholdRule::validate() const {
  if (mode == Mode::shadow_estimated) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
      throw ConfigError("holdout fraction must be in (0,1)");
    }
    if (!(percentile >= 0.0 && percentile <= 100.0)) {
      throw ConfigError("threshold percentile must be in [0,100]");
    }
  }
}

std::vector<LabeledSample> relabel(Oracle& oracle, const std::vector<LabeledSample>& shadow,
                                   int workers) {
  std::vector<LabeledSample> out = shadow;
  std::atomic<std::size_t> completed{0};
  try {
    parallel_for(out.size(), workers, [&](std::size_t i) {
      out[i].label = oracle.query_label(out[i].x);
      completed.fetch_add(1);
    });
  } catch (const BudgetError&) {
    throw BudgetError("relabeling stopped early; completed " +
                          std::to_string(completed.load()) + " of " +
                          std::to_string(out.size()),
                      oracle.queries_used());
  }
  return out;
}

Model train_shadow(const TransferConfig& cfg, const std::vector<LabeledSample>& relabeled) {
  return train(cfg.shadow_arch, relabeled, cfg.shadow_train);
}

AttackScore score_sample(const Model& shadow, const SampleVector& x, int label,
                         Metric metric) {
  if (label < 0 || label >= shadow.arch.num_classes) {
    throw ConfigError("label " + std::to_string(label) + " outside the class range");
  }
  std::vector<double> p = shadow.predict_scores(x);
  AttackScore score;
  score.orientation = metric_orientation(metric);
  switch (metric) {
    case Metric::loss:
      score.value = -std::log(std::max(p[static_cast<std::size_t>(label)], kProbFloor));
      break;
    case Metric::max_confidence:
      score.value = *std::max_element(p.begin(), p.end());
      break;
    case Metric::normalized_entropy: {
      double h = 0.0;
      for (double v : p) h += v * std::log(std::max(v, kProbFloor));
      score.value = -h / std::log(static_cast<double>(shadow.arch.num_classes));
      break;
    }
  }
  return score;
}

double ace(const std::vector<double>& scores, int predicted) {
  if (scores.size() < 2) throw ConfigError("ace needs at least two classes");
  if (predicted < 0 || predicted >= static_cast<int>(scores.size())) {
    throw ConfigError("predicted label outside the class range");
  }
  double acc = 0.0;
  for (int c = 0; c < static_cast<int>(scores.size()); ++c) {
    if (c == predicted) continue;
    acc += -std::log(std::max(scores[static_cast<std::size_t>(c)], kProbFloor));
  }
  return acc / static_cast<double>(scores.size() - 1);
}

double estimate_threshold_shadow(const Model& shadow,
                                 const std::vector<LabeledSample>& holdout, Metric metric,
                                 double percentile) {
  if (holdout.empty()) throw EstimationError("threshold estimation needs a holdout");
  std::vector<double> values;
  values.reserve(holdout.size());
  for (const auto& s : holdout) {
    values.push_back(score_sample(shadow, s.x, s.label, metric).value);
  }
  return interpolated_percentile(std::move(values), percentile);
}

bool member_side(const AttackScore& score, double tau) {
  return score.orientation == Orientation::lower_means_member ? score.value <= tau
                                                              : score.value >= tau;
}

AuditReport run_transfer_attack(Oracle& oracle, const DatasetSplit& split,
                                const TransferConfig& cfg) {
  if (split.shadow.empty()) throw ConfigError("transfer attack needs shadow data");
  cfg.threshold.validate();
  auto t0 = std::chrono::steady_clock::now();
  std::uint64_t queries_before = oracle.queries_used();

  std::vector<LabeledSample> relabeled = relabel(oracle, split.shadow, cfg.workers);

  // Tail of the (already shuffled) shadow set doubles as the non-member
  // stand-ins for threshold estimation.
  std::vector<LabeledSample> train_part = relabeled;
  std::vector<LabeledSample> holdout;
  if (cfg.threshold.mode == ThresholdRule::Mode::shadow_estimated) {
    if (relabeled.size() < 2) {
      throw EstimationError("shadow set too small to spare a threshold holdout");
    }
    std::size_t holdout_n = static_cast<std::size_t>(
        std::round(cfg.threshold.holdout_fraction * static_cast<double>(relabeled.size())));
    holdout_n = std::clamp<std::size_t>(holdout_n, 1, relabeled.size() - 1);
    holdout.assign(relabeled.end() - static_cast<std::ptrdiff_t>(holdout_n), relabeled.end());
    train_part.resize(relabeled.size() - holdout_n);
  }

  Model shadow = train_shadow(cfg, train_part);

  ThresholdInfo threshold;
  threshold.set = true;
  if (cfg.threshold.mode == ThresholdRule::Mode::fixed) {
    threshold.value = cfg.threshold.fixed_value;
    threshold.provenance = "fixed";
  } else {
    threshold.value =
        estimate_threshold_shadow(shadow, holdout, cfg.metric, cfg.threshold.percentile);
    threshold.provenance = "shadow_percentile_" + compact_number(cfg.threshold.percentile);
  }

  EvalPairs pairs = make_eval_pairs(split);
  AuditReport report;
  report.attack = "transfer_" + metric_name(cfg.metric);
  report.model_id = oracle.id();
  report.dataset_digest = split_digest(split);
  report.threshold = threshold;
  report.members_evaluated = static_cast<int>(pairs.members.size());
  report.nonmembers_evaluated = static_cast<int>(pairs.nonmembers.size());
  report.eval_subsampled = pairs.subsampled;

  std::vector<double> member_scores, nonmember_scores;
  auto score_side = [&](const std::vector<LabeledSample>& side, bool is_member,
                        std::vector<double>& bucket) {
    bucket.resize(side.size());
    parallel_for(side.size(), cfg.workers, [&](std::size_t i) {
      bucket[i] = score_sample(shadow, side[i].x, side[i].label, cfg.metric).value;
    });
    for (std::size_t i = 0; i < side.size(); ++i) {
      AttackScore s{bucket[i], metric_orientation(cfg.metric)};
      report.samples.push_back({bucket[i], member_side(s, threshold.value), is_member});
    }
  };
  score_side(pairs.members, true, member_scores);
  score_side(pairs.nonmembers, false, nonmember_scores);

  report.auc = auc(member_scores, nonmember_scores, metric_orientation(cfg.metric));
  std::vector<std::pair<bool, bool>> verdicts;
  verdicts.reserve(report.samples.size());
  for (const auto& s : report.samples) verdicts.emplace_back(s.verdict, s.is_member);
  report.f1 = f1_score(verdicts);
  report.target_queries = oracle.queries_used() - queries_before;
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

}  // namespace mia
