#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>

#include "doctest.h"
#include "mia/data.hpp"
#include "mia/error.hpp"
#include "mia/oracle.hpp"
#include "mia/rng.hpp"
#include "mia/smoothing.hpp"
#include "mia/stats.hpp"
#include "test_support.hpp"

using namespace mia;

namespace {

// Axis-aligned half-space with the boundary at x0 = threshold: clipping
// a coordinate to [0,1] never moves a point across the boundary, so the
// Gaussian mass identity stays exact.
std::shared_ptr<miatest::HalfSpaceBackend> axis_halfspace(int dim, double threshold) {
  std::vector<double> w(static_cast<std::size_t>(dim), 0.0);
  w[0] = 1.0;
  return std::make_shared<miatest::HalfSpaceBackend>(w, -threshold);
}

SampleVector centered_point(int dim, double x0) {
  SampleVector x;
  x.features.assign(static_cast<std::size_t>(dim), 0.5);
  x.features[0] = x0;
  return x;
}

}  // namespace

TEST_CASE("normal quantile is accurate against a high-precision table") {
  struct Row {
    double p;
    double z;
  };
  const Row table[] = {
      {0.5, 0.0},
      {0.975, 1.9599639845400542},
      {0.025, -1.9599639845400542},
      {0.9, 1.2815515655446005},
      {0.99, 2.3263478740408411},
      {0.999, 3.0902323061678135},
      {0.001, -3.0902323061678135},
      {0.0001, -3.7190164854556806},
      {0.7, 0.52440051270804078},
      {0.55, 0.12566134685507403},
      {0.999999, 4.7534243088228989},
  };
  for (const auto& row : table) {
    CHECK(std::abs(standard_normal_quantile(row.p) - row.z) <= 1e-9);
  }
  CHECK_THROWS_AS(standard_normal_quantile(0.0), ConfigError);
  CHECK_THROWS_AS(standard_normal_quantile(1.0), ConfigError);
}

TEST_CASE("normal cdf and quantile are mutual inverses") {
  CHECK(standard_normal_cdf(1.0) == doctest::Approx(0.84134474606854295).epsilon(1e-12));
  CHECK(standard_normal_cdf(-3.0) == doctest::Approx(0.0013498980316300945).epsilon(1e-10));
  for (double p : {0.01, 0.2, 0.4, 0.6, 0.8, 0.99}) {
    CHECK(std::abs(standard_normal_cdf(standard_normal_quantile(p)) - p) <= 1e-12);
  }
}

TEST_CASE("smoothing config validation") {
  CHECK_THROWS_AS(SmoothingConfig({0.0, 100, 0}).validate(), ConfigError);
  CHECK_THROWS_AS(SmoothingConfig({0.25, 1, 0}).validate(), ConfigError);
  CHECK_NOTHROW(SmoothingConfig({0.25, 2, 0}).validate());
}

TEST_CASE("constant classifiers give frequency one to their label") {
  Oracle oracle(std::make_shared<miatest::StubBackend>(std::vector<double>{0.2, 0.8}, 3),
                Exposure::label_only);
  SmoothingConfig cfg{0.5, 200, 1};
  SmoothedPrediction pred = smoothed_predict(oracle, SampleVector{{0.5, 0.5, 0.5}}, cfg);
  CHECK(pred.label == 1);
  CHECK(pred.frequencies[1] == 1.0);
  CHECK(pred.frequencies[0] == 0.0);
  CHECK(oracle.queries_used() == 200);
}

TEST_CASE("half-space label frequency approaches the Gaussian mass") {
  const double sigma = 0.25;
  const double d0 = 0.2;
  auto backend = axis_halfspace(6, 0.25 + d0);
  Oracle oracle(backend, Exposure::label_only);
  SampleVector x = centered_point(6, 0.25);
  int y = backend->predict_label(x);

  SmoothingConfig cfg{sigma, 10000, 3};
  SmoothedPrediction pred = smoothed_predict(oracle, x, cfg);
  double expected = standard_normal_cdf(d0 / sigma);
  CHECK(std::abs(pred.frequencies[static_cast<std::size_t>(y)] - expected) <=
        3.0 / std::sqrt(10000.0));
}

TEST_CASE("vanishing noise reduces smoothing to the base classifier") {
  auto corpus = generate_blobs(BlobConfig{3, 4, {}, 0.2, 90, 17});
  TrainConfig tcfg;
  tcfg.epochs = 40;
  tcfg.seed = 6;
  auto model =
      std::make_shared<const Model>(train(MlpArchitecture{4, {10}, 3}, corpus, tcfg));
  Oracle oracle = make_local_oracle(model, Exposure::label_only);
  SampleVector x = corpus[5].x;
  SmoothingConfig cfg{1e-6, 100, 9};
  SmoothedPrediction pred = smoothed_predict(oracle, x, cfg);
  CHECK(pred.label == model->predict_label(x));
  CHECK(pred.frequencies[static_cast<std::size_t>(pred.label)] == 1.0);
}

TEST_CASE("radius formula corner cases") {
  CHECK(certified_radius_from_frequencies(0.5, 0.5, 0.25, 1000) == 0.0);
  CHECK(certified_radius_from_frequencies(0.3, 0.6, 0.25, 1000) == 0.0);
  // frequencies at the clamp edges stay finite
  double cr = certified_radius_from_frequencies(1.0, 0.0, 0.25, 1000);
  CHECK(std::isfinite(cr));
  CHECK(cr == doctest::Approx(0.25 * standard_normal_quantile(0.999)).epsilon(1e-12));
}

TEST_CASE("radius is linear in sigma for frozen frequencies") {
  for (double pa : {0.6, 0.8, 0.95}) {
    double pb = 1.0 - pa;
    double base = certified_radius_from_frequencies(pa, pb, 0.25, 1000);
    double doubled = certified_radius_from_frequencies(pa, pb, 0.5, 1000);
    CHECK(doubled == 2.0 * base);
  }
}

TEST_CASE("radius is monotone in the frequencies on the clamped domain") {
  double prev = -1.0;
  for (double pa : {0.55, 0.65, 0.75, 0.85, 0.95}) {
    double cr = certified_radius_from_frequencies(pa, 0.5, 0.25, 100000);
    CHECK(cr > prev);
    prev = cr;
  }
  prev = 1e9;
  for (double pb : {0.05, 0.15, 0.25, 0.35}) {
    double cr = certified_radius_from_frequencies(0.9, pb, 0.25, 100000);
    CHECK(cr < prev);
    prev = cr;
  }
}

TEST_CASE("binary half-space radius collapses to the true distance") {
  const double sigma = 0.25;
  const double d0 = 0.25;
  auto backend = axis_halfspace(5, 0.25 + d0);
  Oracle oracle(backend, Exposure::label_only);
  SampleVector x = centered_point(5, 0.25);
  int y = backend->predict_label(x);
  SmoothingConfig cfg{sigma, 20000, 11};
  RadiusEstimate est = certified_radius(oracle, x, y, cfg);
  CHECK(est.classified_correctly);
  CHECK(std::abs(est.certified_radius - d0) <= 0.1 * sigma);
  CHECK(est.p_a + est.p_b <= 1.0 + 1e-12);
}

TEST_CASE("misclassified points have zero certified radius") {
  auto backend = axis_halfspace(4, 0.5);
  Oracle oracle(backend, Exposure::label_only);
  SampleVector x = centered_point(4, 0.2);
  int wrong = 1 - backend->predict_label(x);
  SmoothingConfig cfg{0.1, 500, 2};
  RadiusEstimate est = certified_radius(oracle, x, wrong, cfg);
  CHECK_FALSE(est.classified_correctly);
  CHECK(est.certified_radius == 0.0);
}

TEST_CASE("radius estimation is deterministic in the seed and stream") {
  auto backend = axis_halfspace(4, 0.6);
  Oracle oracle(backend, Exposure::label_only);
  SampleVector x = centered_point(4, 0.3);
  SmoothingConfig cfg{0.25, 400, 21};
  RadiusEstimate a = certified_radius(oracle, x, 0, cfg, 7);
  RadiusEstimate b = certified_radius(oracle, x, 0, cfg, 7);
  CHECK(a.certified_radius == b.certified_radius);
  RadiusEstimate c = certified_radius(oracle, x, 0, cfg, 8);
  CHECK(a.certified_radius != c.certified_radius);  // different stream, different noise
}

TEST_CASE("singleton average is the sample's radius") {
  auto backend = axis_halfspace(4, 0.6);
  Oracle oracle(backend, Exposure::label_only);
  LabeledSample s{centered_point(4, 0.3), 0};
  SmoothingConfig cfg{0.25, 300, 5};
  AcrSummary summary = average_certified_radius(oracle, {s}, cfg);
  RadiusEstimate direct = certified_radius(oracle, s.x, s.label, cfg, 0);
  CHECK(summary.mean_radius == direct.certified_radius);
  CHECK(summary.count == 1);
  CHECK_THROWS_AS(average_certified_radius(oracle, {}, cfg), EstimationError);
}

TEST_CASE("average radius matches the analytic mean on a margin ladder") {
  const double sigma = 0.25;
  auto backend = axis_halfspace(4, 0.7);
  Oracle oracle(backend, Exposure::label_only);
  std::vector<LabeledSample> samples;
  std::vector<double> margins{0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
  for (double m : margins) {
    samples.push_back({centered_point(4, 0.7 - m), 0});
  }
  SmoothingConfig cfg{sigma, 5000, 13};
  AcrSummary summary = average_certified_radius(oracle, samples, cfg, 2);
  double analytic = 0.0;
  for (double m : margins) analytic += m;
  analytic /= static_cast<double>(margins.size());
  CHECK(std::abs(summary.mean_radius - analytic) <= 0.02);
  CHECK(summary.correct_rate == 1.0);
}

TEST_CASE("the radius report separates members from non-members per oracle") {
  auto corpus = generate_blobs(BlobConfig{2, 4, {}, 0.15, 120, 3});
  DatasetSplit split = split_dataset(corpus, {20, 30, 0}, 4);
  auto backend = axis_halfspace(4, 0.5);
  Oracle target(backend, Exposure::label_only);
  Oracle same(backend, Exposure::label_only);

  SmoothingConfig cfg{0.25, 200, 6};
  auto rows = acr_report(target, &same, split, cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].model == "target");
  CHECK(rows[1].model == "shadow");
  // identical oracle handles produce identical numbers
  CHECK(rows[0].acr_member == rows[1].acr_member);
  CHECK(rows[0].acr_nonmember == rows[1].acr_nonmember);
  CHECK(rows[0].gap == doctest::Approx(rows[0].acr_member - rows[0].acr_nonmember));

  const std::string path = "tmp_acr.csv";
  write_acr_csv(rows, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "model,split,sigma,n,acr_member,acr_nonmember,gap");
  int lines = 0;
  std::string line;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2);
  std::filesystem::remove(path);
}
