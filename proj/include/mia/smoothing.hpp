#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mia/data.hpp"
#include "mia/oracle.hpp"

namespace mia {

struct SmoothingConfig {
  double sigma = 0.25;
  int num_samples = 1000;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SmoothedPrediction {
  int label = 0;
  std::vector<double> frequencies;  // per class, sums to 1
};

// Majority label of the oracle under Gaussian input noise; each of the n
// noised queries is clipped back into [0,1]^d. Consumes n queries.
// `stream` separates the noise streams of different samples.
SmoothedPrediction smoothed_predict(Oracle& oracle, const SampleVector& x,
                                    const SmoothingConfig& cfg, std::uint64_t stream = 0);

struct RadiusEstimate {
  double certified_radius = 0.0;
  double p_a = 0.0;  // clamped frequency of the ground-truth label
  double p_b = 0.0;  // clamped runner-up frequency
  bool classified_correctly = false;
};

// Plug-in Monte Carlo estimate of the smoothed classifier's certified
// radius: (sigma/2) * (Phi^-1(p_a) - Phi^-1(p_b)), frequencies clamped to
// [1/n, 1-1/n] before inversion; zero when the ground-truth label does
// not win strictly.
RadiusEstimate certified_radius(Oracle& oracle, const SampleVector& x, int label,
                                const SmoothingConfig& cfg, std::uint64_t stream = 0);

// The radius formula alone, on given frequencies.
double certified_radius_from_frequencies(double p_a_raw, double p_b_raw, double sigma,
                                         int num_samples);

struct AcrSummary {
  double mean_radius = 0.0;
  double stderr_mean = 0.0;  // sample std of per-point radii / sqrt(count)
  double correct_rate = 0.0;
  int count = 0;
};

// Mean certified radius over the set; misclassified points contribute 0
// and are counted in (1 - correct_rate).
AcrSummary average_certified_radius(Oracle& oracle,
                                    const std::vector<LabeledSample>& samples,
                                    const SmoothingConfig& cfg, int workers = 1);

struct AcrReportRow {
  std::string model;  // "target" or "shadow"
  std::string split;  // "train=N,test=M"
  double sigma = 0.0;
  int num_samples = 0;
  double acr_member = 0.0;
  double acr_nonmember = 0.0;
  double gap = 0.0;
  double stderr_member = 0.0;
  double stderr_nonmember = 0.0;
  double correct_rate_member = 0.0;
  double correct_rate_nonmember = 0.0;
};

// Member/non-member radius gap for the target and, when given, a shadow
// oracle evaluated on the same points.
std::vector<AcrReportRow> acr_report(Oracle& target, Oracle* shadow,
                                     const DatasetSplit& split, const SmoothingConfig& cfg,
                                     int workers = 1);

void write_acr_csv(const std::vector<AcrReportRow>& rows, const std::string& path);

}  // namespace mia
