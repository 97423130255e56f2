#include "mia/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "mia/error.hpp"
#include "mia/parallel.hpp"
#include "mia/rng.hpp"
#include "mia/stats.hpp"

namespace mia {

void SmoothingConfig::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("smoothing sigma must be positive");
  if (num_samples < 2) throw ConfigError("smoothing needs at least 2 samples");
}

SmoothedPrediction smoothed_predict(Oracle& oracle, const SampleVector& x,
                                    const SmoothingConfig& cfg, std::uint64_t stream) {
  cfg.validate();
  if (x.dim() != oracle.input_dim()) throw ShapeError("sample dim does not match oracle");
  auto rng = seeded_rng(mix_seed(cfg.seed, 0x5a00u, stream));
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(oracle.num_classes()), 0);
  SampleVector noised;
  noised.features.resize(x.features.size());
  for (int i = 0; i < cfg.num_samples; ++i) {
    std::vector<double> eps = gaussian_vector(rng, x.dim(), cfg.sigma);
    for (std::size_t k = 0; k < noised.features.size(); ++k) {
      noised.features[k] = std::clamp(x.features[k] + eps[k], 0.0, 1.0);
    }
    int label = oracle.query_label(noised);
    if (label < 0 || label >= oracle.num_classes()) {
      throw ShapeError("oracle returned label outside its class range");
    }
    ++counts[static_cast<std::size_t>(label)];
  }
  SmoothedPrediction out;
  out.frequencies.resize(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    out.frequencies[c] =
        static_cast<double>(counts[c]) / static_cast<double>(cfg.num_samples);
  }
  out.label = argmax_lowest(out.frequencies);
  return out;
}

double certified_radius_from_frequencies(double p_a_raw, double p_b_raw, double sigma,
                                         int num_samples) {
  if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
  if (num_samples < 2) throw ConfigError("num_samples must be at least 2");
  if (p_a_raw <= p_b_raw) return 0.0;
  double lo = 1.0 / static_cast<double>(num_samples);
  double hi = 1.0 - lo;
  double pa = std::clamp(p_a_raw, lo, hi);
  double pb = std::clamp(p_b_raw, lo, hi);
  double cr = 0.5 * sigma * (standard_normal_quantile(pa) - standard_normal_quantile(pb));
  return std::max(cr, 0.0);
}

RadiusEstimate certified_radius(Oracle& oracle, const SampleVector& x, int label,
                                const SmoothingConfig& cfg, std::uint64_t stream) {
  if (label < 0 || label >= oracle.num_classes()) {
    throw ConfigError("label outside the oracle's class range");
  }
  SmoothedPrediction pred = smoothed_predict(oracle, x, cfg, stream);
  double p_a_raw = pred.frequencies[static_cast<std::size_t>(label)];
  double p_b_raw = 0.0;
  for (int c = 0; c < static_cast<int>(pred.frequencies.size()); ++c) {
    if (c == label) continue;
    p_b_raw = std::max(p_b_raw, pred.frequencies[static_cast<std::size_t>(c)]);
  }
  double lo = 1.0 / static_cast<double>(cfg.num_samples);
  double hi = 1.0 - lo;
  RadiusEstimate est;
  est.p_a = std::clamp(p_a_raw, lo, hi);
  est.p_b = std::clamp(p_b_raw, lo, hi);
  est.classified_correctly = p_a_raw > p_b_raw;
  est.certified_radius =
      est.classified_correctly
          ? certified_radius_from_frequencies(p_a_raw, p_b_raw, cfg.sigma, cfg.num_samples)
          : 0.0;
  return est;
}

AcrSummary average_certified_radius(Oracle& oracle,
                                    const std::vector<LabeledSample>& samples,
                                    const SmoothingConfig& cfg, int workers) {
  if (samples.empty()) throw EstimationError("radius average over an empty set");
  std::vector<double> radii(samples.size(), 0.0);
  std::vector<int> correct(samples.size(), 0);
  parallel_for(samples.size(), workers, [&](std::size_t i) {
    RadiusEstimate est = certified_radius(oracle, samples[i].x, samples[i].label, cfg, i);
    radii[i] = est.certified_radius;
    correct[i] = est.classified_correctly ? 1 : 0;
  });
  AcrSummary out;
  out.count = static_cast<int>(samples.size());
  double sum = 0.0;
  int n_correct = 0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    sum += radii[i];
    n_correct += correct[i];
  }
  out.mean_radius = sum / static_cast<double>(radii.size());
  out.correct_rate = static_cast<double>(n_correct) / static_cast<double>(radii.size());
  double var = 0.0;
  for (double r : radii) var += (r - out.mean_radius) * (r - out.mean_radius);
  if (radii.size() > 1) {
    var /= static_cast<double>(radii.size() - 1);
    out.stderr_mean = std::sqrt(var / static_cast<double>(radii.size()));
  }
  return out;
}

namespace {

AcrReportRow build_row(const std::string& model_tag, Oracle& oracle,
                       const DatasetSplit& split, const SmoothingConfig& cfg, int workers) {
  // Distinct noise streams for the member and non-member passes.
  SmoothingConfig member_cfg = cfg;
  member_cfg.seed = mix_seed(cfg.seed, 0x0acau, 1);
  SmoothingConfig nonmember_cfg = cfg;
  nonmember_cfg.seed = mix_seed(cfg.seed, 0x0acau, 2);

  AcrSummary member = average_certified_radius(oracle, split.train, member_cfg, workers);
  AcrSummary nonmember =
      average_certified_radius(oracle, split.test, nonmember_cfg, workers);

  AcrReportRow row;
  row.model = model_tag;
  row.split = "train=" + std::to_string(split.train.size()) + ";test=" +
              std::to_string(split.test.size());
  row.sigma = cfg.sigma;
  row.num_samples = cfg.num_samples;
  row.acr_member = member.mean_radius;
  row.acr_nonmember = nonmember.mean_radius;
  row.gap = member.mean_radius - nonmember.mean_radius;
  row.stderr_member = member.stderr_mean;
  row.stderr_nonmember = nonmember.stderr_mean;
  row.correct_rate_member = member.correct_rate;
  row.correct_rate_nonmember = nonmember.correct_rate;
  return row;
}

}  // namespace

std::vector<AcrReportRow> acr_report(Oracle& target, Oracle* shadow,
                                     const DatasetSplit& split, const SmoothingConfig& cfg,
                                     int workers) {
  if (split.train.empty() || split.test.empty()) {
    throw EstimationError("radius report needs both members and non-members");
  }
  std::vector<AcrReportRow> rows;
  rows.push_back(build_row("target", target, split, cfg, workers));
  if (shadow != nullptr) {
    rows.push_back(build_row("shadow", *shadow, split, cfg, workers));
  }
  return rows;
}

void write_acr_csv(const std::vector<AcrReportRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "model,split,sigma,n,acr_member,acr_nonmember,gap\n";
  char buf[96];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", r.acr_member, r.acr_nonmember,
                  r.gap);
    out << r.model << ',' << r.split << ',' << r.sigma << ',' << r.num_samples << ','
        << buf << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace mia
