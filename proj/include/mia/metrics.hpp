#pragma once

#include <vector>

namespace mia {

// Whether larger score values point toward membership.
enum class Orientation { higher_means_member, lower_means_member };

Orientation flip(Orientation o);

// Exact Mann-Whitney statistic: the fraction of (member, non-member)
// pairs ranked member-first under the orientation, ties counted 1/2.
// Scores may be +/-infinity but not NaN.
double auc(const std::vector<double>& member_scores,
           const std::vector<double>& nonmember_scores, Orientation orientation);

// verdicts: (predicted_member, is_member) per sample; member is the
// positive class. Returns 0 when no true positives are possible.
double f1_score(const std::vector<std::pair<bool, bool>>& verdicts);

// Ascending percentile with linear interpolation between order statistics.
double interpolated_percentile(std::vector<double> values, double percentile);

// Percentile over values sorted in descending order: t=0 is the maximum,
// t=100 the minimum, linear interpolation between ranks.
double descending_percentile(std::vector<double> values, double t);

double median(std::vector<double> values);

}  // namespace mia
