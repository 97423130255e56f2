#include "mia/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "mia/error.hpp"

namespace mia {

Orientation flip(Orientation o) {
  return o == Orientation::higher_means_member ? Orientation::lower_means_member
                                               : Orientation::higher_means_member;
}

double auc(const std::vector<double>& member_scores,
           const std::vector<double>& nonmember_scores, Orientation orientation) {
  if (member_scores.empty() || nonmember_scores.empty()) {
    throw MetricError("auc needs scores on both sides");
  }
  for (double v : member_scores) {
    if (std::isnan(v)) throw MetricError("auc scores must not be NaN");
  }
  for (double v : nonmember_scores) {
    if (std::isnan(v)) throw MetricError("auc scores must not be NaN");
  }
  std::vector<double> nm = nonmember_scores;
  std::sort(nm.begin(), nm.end());
  std::uint64_t greater = 0;  // member strictly above the non-member
  std::uint64_t ties = 0;
  for (double m : member_scores) {
    auto lo = std::lower_bound(nm.begin(), nm.end(), m);
    auto hi = std::upper_bound(lo, nm.end(), m);
    greater += static_cast<std::uint64_t>(lo - nm.begin());
    ties += static_cast<std::uint64_t>(hi - lo);
  }
  std::uint64_t total2 = 2 * static_cast<std::uint64_t>(member_scores.size()) *
                         static_cast<std::uint64_t>(nonmember_scores.size());
  std::uint64_t favorable2 =
      orientation == Orientation::higher_means_member
          ? 2 * greater + ties
          : total2 - 2 * greater - ties;  // member strictly below, ties half
  // Divide on the smaller side so that the two orientations sum to 1.0
  // exactly in floating point.
  if (2 * favorable2 <= total2) {
    return static_cast<double>(favorable2) / static_cast<double>(total2);
  }
  return 1.0 - static_cast<double>(total2 - favorable2) / static_cast<double>(total2);
}

double f1_score(const std::vector<std::pair<bool, bool>>& verdicts) {
  if (verdicts.empty()) throw MetricError("f1 over an empty verdict list");
  std::uint64_t tp = 0, fp = 0, fn = 0;
  for (const auto& [predicted, truth] : verdicts) {
    if (predicted && truth) ++tp;
    else if (predicted && !truth) ++fp;
    else if (!predicted && truth) ++fn;
  }
  std::uint64_t denom = 2 * tp + fp + fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

double interpolated_percentile(std::vector<double> values, double percentile) {
  if (values.empty()) throw MetricError("percentile of an empty list");
  if (!(percentile >= 0.0 && percentile <= 100.0)) {
    throw ConfigError("percentile must be in [0,100]");
  }
  std::sort(values.begin(), values.end());
  if (values.size() == 1) return values.front();
  double pos = percentile / 100.0 * static_cast<double>(values.size() - 1);
  std::size_t idx = static_cast<std::size_t>(pos);
  if (idx >= values.size() - 1) return values.back();
  double frac = pos - static_cast<double>(idx);
  double a = values[idx];
  double b = values[idx + 1];
  if (frac == 0.0 || a == b) return a;
  if (std::isinf(a) || std::isinf(b)) return b;
  return a + frac * (b - a);
}

double descending_percentile(std::vector<double> values, double t) {
  if (values.empty()) throw MetricError("percentile of an empty list");
  if (!(t >= 0.0 && t <= 100.0)) throw ConfigError("t percentile must be in [0,100]");
  std::sort(values.begin(), values.end(), std::greater<double>());
  if (values.size() == 1) return values.front();
  double pos = t / 100.0 * static_cast<double>(values.size() - 1);
  std::size_t idx = static_cast<std::size_t>(pos);
  if (idx >= values.size() - 1) return values.back();
  double frac = pos - static_cast<double>(idx);
  double a = values[idx];
  double b = values[idx + 1];
  if (frac == 0.0 || a == b) return a;
  if (std::isinf(a) || std::isinf(b)) return a;  // no interpolation off an infinity
  return a + frac * (b - a);
}

double median(std::vector<double> values) {
  if (values.empty()) throw MetricError("median of an empty list");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace mia
