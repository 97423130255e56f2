#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mia/data.hpp"

namespace mia {

struct SampleOutcome {
  double score = 0.0;  // may be +infinity for unbroken boundary candidates
  bool verdict = false;
  bool is_member = false;

  bool operator==(const SampleOutcome&) const = default;
};

struct ThresholdInfo {
  bool set = false;
  double value = 0.0;
  std::string provenance;  // "fixed", "shadow_percentile_50", "random_probes_t50", ...

  bool operator==(const ThresholdInfo&) const = default;
};

// One attack run against one model: the signal, the decision quality,
// and the query bill.
struct AuditReport {
  std::string attack;
  std::string model_id;
  std::string dataset_digest;
  ThresholdInfo threshold;
  double auc = 0.0;
  std::optional<double> f1;
  std::vector<SampleOutcome> samples;
  std::uint64_t target_queries = 0;
  double wall_clock_seconds = 0.0;
  int members_evaluated = 0;
  int nonmembers_evaluated = 0;
  bool eval_subsampled = false;
  std::string note;

  bool operator==(const AuditReport&) const = default;
};

// Equal-sized member/non-member evaluation sets; the larger side of the
// split is subsampled with the split seed.
struct EvalPairs {
  std::vector<LabeledSample> members;
  std::vector<LabeledSample> nonmembers;
  bool subsampled = false;
};

EvalPairs make_eval_pairs(const DatasetSplit& split);

enum class ReportFormat { json, csv };

ReportFormat report_format_from_name(const std::string& name);

// JSON: versioned array with deterministic field order. CSV: one summary
// row per report at `path`, plus a per-sample detail file per report
// next to it.
void emit_reports(const std::vector<AuditReport>& reports, ReportFormat format,
                  const std::string& path);

std::string reports_to_json_text(const std::vector<AuditReport>& reports);
std::vector<AuditReport> reports_from_json_text(const std::string& text);

}  // namespace mia
