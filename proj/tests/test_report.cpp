#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "doctest.h"
#include "mia/data.hpp"
#include "mia/error.hpp"
#include "mia/report.hpp"
#include "test_support.hpp"

using namespace mia;

namespace {

AuditReport sample_report(int tag) {
  AuditReport r;
  r.attack = "boundary_hsj_style_l2";
  r.model_id = "model" + std::to_string(tag);
  r.dataset_digest = "abc123";
  r.threshold = {true, 0.25, "random_probes_t50"};
  r.auc = 0.875;
  r.f1 = 0.8;
  r.samples = {{0.5, true, true},
               {std::numeric_limits<double>::infinity(), true, true},
               {0.01, false, false}};
  r.target_queries = 4321;
  r.wall_clock_seconds = 1.5;
  r.members_evaluated = 2;
  r.nonmembers_evaluated = 1;
  r.eval_subsampled = true;
  r.note = "1 budget_exhausted, 0 already_misclassified";
  return r;
}

}  // namespace

TEST_CASE("json round trip preserves reports, infinities included") {
  std::vector<AuditReport> reports{sample_report(1), sample_report(2)};
  reports[1].threshold = {};
  reports[1].f1.reset();
  std::string text = reports_to_json_text(reports);
  auto parsed = reports_from_json_text(text);
  REQUIRE(parsed.size() == 2);
  CHECK(parsed[0] == reports[0]);
  CHECK(parsed[1] == reports[1]);
}

TEST_CASE("empty report lists are valid documents") {
  std::string text = reports_to_json_text({});
  CHECK(reports_from_json_text(text).empty());
}

TEST_CASE("emit writes files and csv has one row per report") {
  std::vector<AuditReport> reports{sample_report(1), sample_report(2), sample_report(3)};
  const std::string json_path = "tmp_reports.json";
  emit_reports(reports, ReportFormat::json, json_path);
  {
    std::ifstream in(json_path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(reports_from_json_text(ss.str()).size() == 3);
  }
  std::filesystem::remove(json_path);

  const std::string csv_path = "tmp_reports.csv";
  emit_reports(reports, ReportFormat::csv, csv_path);
  std::ifstream in(csv_path);
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 4);  // header + one row per (model, attack)
  for (int i = 0; i < 3; ++i) {
    std::string detail = "tmp_reports_detail_" + std::to_string(i) + ".csv";
    CHECK(std::filesystem::exists(detail));
    std::filesystem::remove(detail);
  }
  std::filesystem::remove(csv_path);
}

TEST_CASE("emission is deterministic") {
  std::vector<AuditReport> reports{sample_report(7)};
  CHECK(reports_to_json_text(reports) == reports_to_json_text(reports));
}

TEST_CASE("malformed report documents are rejected") {
  CHECK_THROWS_AS(reports_from_json_text("not json"), IoError);
  CHECK_THROWS_AS(reports_from_json_text(R"({"schema_version": 99, "reports": []})"),
                  IoError);
}

TEST_CASE("evaluation pairs subsample the larger side deterministically") {
  auto corpus = generate_blobs(BlobConfig{2, 3, {}, 0.2, 300, 15});
  DatasetSplit split = split_dataset(corpus, {40, 100, 0}, 77);
  EvalPairs pairs = make_eval_pairs(split);
  CHECK(pairs.members.size() == 40);
  CHECK(pairs.nonmembers.size() == 40);
  CHECK(pairs.subsampled);
  EvalPairs again = make_eval_pairs(split);
  for (std::size_t i = 0; i < pairs.nonmembers.size(); ++i) {
    CHECK(pairs.nonmembers[i] == again.nonmembers[i]);
  }
  // every subsampled non-member comes from the test partition
  for (const auto& s : pairs.nonmembers) {
    bool found = false;
    for (const auto& t : split.test) {
      if (s == t) {
        found = true;
        break;
      }
    }
    CHECK(found);
  }

  DatasetSplit equal = split_dataset(corpus, {50, 50, 0}, 78);
  EvalPairs balanced = make_eval_pairs(equal);
  CHECK_FALSE(balanced.subsampled);
  CHECK(balanced.members.size() == 50);
}
