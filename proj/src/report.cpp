#include "mia/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "json.hpp"
#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

using nlohmann::json;
using nlohmann::ordered_json;

EvalPairs make_eval_pairs(const DatasetSplit& split) {
  EvalPairs out;
  std::size_t m = std::min(split.train.size(), split.test.size());
  auto take = [&](const std::vector<LabeledSample>& side) {
    if (side.size() == m) return side;
    std::vector<LabeledSample> shuffled = side;
    auto rng = seeded_rng(mix_seed(split.seed, 0xe7a1u));
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    shuffled.resize(m);
    return shuffled;
  };
  out.members = take(split.train);
  out.nonmembers = take(split.test);
  out.subsampled = split.train.size() != split.test.size();
  return out;
}

ReportFormat report_format_from_name(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw ConfigError("unknown report format '" + name + "'");
}

namespace {

constexpr int kSchemaVersion = 1;

json score_to_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double score_from_json(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw IoError("unknown score literal '" + s + "'");
  }
  return j.get<double>();
}

ordered_json report_to_json(const AuditReport& r) {
  ordered_json j;
  j["attack"] = r.attack;
  j["model_id"] = r.model_id;
  j["dataset_digest"] = r.dataset_digest;
  if (r.threshold.set) {
    j["threshold"] = {{"value", r.threshold.value}, {"provenance", r.threshold.provenance}};
  } else {
    j["threshold"] = nullptr;
  }
  j["auc"] = r.auc;
  if (r.f1) j["f1"] = *r.f1;
  else j["f1"] = nullptr;
  ordered_json samples = ordered_json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"score", score_to_json(s.score)},
                       {"verdict", s.verdict},
                       {"member", s.is_member}});
  }
  j["samples"] = std::move(samples);
  j["target_queries"] = r.target_queries;
  j["wall_clock_seconds"] = r.wall_clock_seconds;
  j["evaluation"] = {{"members", r.members_evaluated},
                     {"nonmembers", r.nonmembers_evaluated},
                     {"subsampled", r.eval_subsampled}};
  j["note"] = r.note;
  return j;
}

AuditReport report_from_json(const json& j) {
  AuditReport r;
  r.attack = j.at("attack").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  r.dataset_digest = j.at("dataset_digest").get<std::string>();
  if (!j.at("threshold").is_null()) {
    r.threshold.set = true;
    r.threshold.value = j["threshold"].at("value").get<double>();
    r.threshold.provenance = j["threshold"].at("provenance").get<std::string>();
  }
  r.auc = j.at("auc").get<double>();
  if (!j.at("f1").is_null()) r.f1 = j["f1"].get<double>();
  for (const auto& sj : j.at("samples")) {
    SampleOutcome s;
    s.score = score_from_json(sj.at("score"));
    s.verdict = sj.at("verdict").get<bool>();
    s.is_member = sj.at("member").get<bool>();
    r.samples.push_back(s);
  }
  r.target_queries = j.at("target_queries").get<std::uint64_t>();
  r.wall_clock_seconds = j.at("wall_clock_seconds").get<double>();
  const auto& ev = j.at("evaluation");
  r.members_evaluated = ev.at("members").get<int>();
  r.nonmembers_evaluated = ev.at("nonmembers").get<int>();
  r.eval_subsampled = ev.at("subsampled").get<bool>();
  r.note = j.at("note").get<std::string>();
  return r;
}

std::string csv_field(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void emit_csv(const std::vector<AuditReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "attack,model_id,dataset_digest,auc,f1,threshold,threshold_provenance,"
         "target_queries,members,nonmembers,subsampled,wall_clock_seconds,note\n";
  for (const auto& r : reports) {
    out << r.attack << ',' << r.model_id << ',' << r.dataset_digest << ','
        << csv_field(r.auc) << ',' << (r.f1 ? csv_field(*r.f1) : "") << ','
        << (r.threshold.set ? csv_field(r.threshold.value) : "") << ','
        << r.threshold.provenance << ',' << r.target_queries << ',' << r.members_evaluated
        << ',' << r.nonmembers_evaluated << ',' << (r.eval_subsampled ? 1 : 0) << ','
        << csv_field(r.wall_clock_seconds) << ',' << r.note << '\n';
  }
  if (!out) throw IoError("write failed for " + path);

  std::string stem = path;
  if (auto pos = stem.rfind(".csv"); pos != std::string::npos && pos == stem.size() - 4) {
    stem.resize(pos);
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    std::string detail_path = stem + "_detail_" + std::to_string(i) + ".csv";
    std::ofstream detail(detail_path);
    if (!detail) throw IoError("cannot write " + detail_path);
    detail << "score,verdict,member\n";
    for (const auto& s : reports[i].samples) {
      detail << csv_field(s.score) << ',' << (s.verdict ? 1 : 0) << ','
             << (s.is_member ? 1 : 0) << '\n';
    }
    if (!detail) throw IoError("write failed for " + detail_path);
  }
}

}  // namespace

std::string reports_to_json_text(const std::vector<AuditReport>& reports) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_to_json(r));
  doc["reports"] = std::move(arr);
  return doc.dump(2) + "\n";
}

std::vector<AuditReport> reports_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const std::exception& e) {
    throw IoError(std::string("invalid report document: ") + e.what());
  }
  if (doc.value("schema_version", -1) != kSchemaVersion) {
    throw IoError("unsupported report schema version");
  }
  std::vector<AuditReport> out;
  for (const auto& rj : doc.at("reports")) out.push_back(report_from_json(rj));
  return out;
}

void emit_reports(const std::vector<AuditReport>& reports, ReportFormat format,
                  const std::string& path) {
  if (format == ReportFormat::json) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << reports_to_json_text(reports);
    if (!out) throw IoError("write failed for " + path);
    return;
  }
  emit_csv(reports, path);
}

}  // namespace mia
