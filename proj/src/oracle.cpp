#include "mia/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

std::string exposure_name(Exposure e) {
  return e == Exposure::label_only ? "label_only" : "scores";
}

Exposure exposure_from_name(const std::string& name) {
  if (name == "label_only") return Exposure::label_only;
  if (name == "scores") return Exposure::scores;
  throw ConfigError("unknown exposure '" + name + "'");
}

LocalModelBackend::LocalModelBackend(std::shared_ptr<const Model> model)
    : model_(std::move(model)) {
  if (!model_) throw ConfigError("local backend needs a model");
}

int LocalModelBackend::num_classes() const { return model_->arch.num_classes; }
int LocalModelBackend::input_dim() const { return model_->arch.input_dim; }

int LocalModelBackend::predict_label(const SampleVector& x) {
  return model_->predict_label(x);
}

std::vector<double> LocalModelBackend::predict_scores(const SampleVector& x) {
  return model_->predict_scores(x);
}

std::string LocalModelBackend::describe() const { return model_digest(*model_); }

Oracle::Oracle(std::shared_ptr<PredictionBackend> backend, Exposure exposure)
    : backend_(std::move(backend)), exposure_(exposure) {
  if (!backend_) throw ConfigError("oracle needs a backend");
  if (exposure_ == Exposure::scores && backend_->capability() == Exposure::label_only) {
    throw ConfigError("backend cannot expose scores");
  }
}

void Oracle::charge() {
  for (;;) {
    std::uint64_t cur = counter_.load();
    if (budget_ && cur >= *budget_) {
      throw BudgetError("oracle query budget exhausted", cur);
    }
    if (counter_.compare_exchange_weak(cur, cur + 1)) return;
  }
}

int Oracle::query_label(const SampleVector& x) {
  if (x.dim() != input_dim()) {
    throw ShapeError("query dim " + std::to_string(x.dim()) + " != oracle dim " +
                     std::to_string(input_dim()));
  }
  charge();
  return backend_->predict_label(x);
}

std::vector<double> Oracle::query_scores(const SampleVector& x) {
  if (exposure_ != Exposure::scores) {
    throw ExposureError("oracle exposes labels only; scores are not available");
  }
  if (x.dim() != input_dim()) {
    throw ShapeError("query dim " + std::to_string(x.dim()) + " != oracle dim " +
                     std::to_string(input_dim()));
  }
  charge();
  return backend_->predict_scores(x);
}

void Oracle::attach_budget(std::uint64_t max_queries) {
  if (max_queries == 0) throw ConfigError("query budget must be positive");
  budget_ = max_queries;
}

void Oracle::clear_budget() { budget_.reset(); }

Oracle make_local_oracle(std::shared_ptr<const Model> model, Exposure exposure) {
  return Oracle(std::make_shared<LocalModelBackend>(std::move(model)), exposure);
}

namespace {

class MemGuardBackend : public PredictionBackend {
 public:
  MemGuardBackend(std::shared_ptr<PredictionBackend> raw, double noise_scale,
                  std::uint64_t seed)
      : raw_(std::move(raw)), noise_scale_(noise_scale), seed_(seed) {
    if (noise_scale_ < 0.0) throw ConfigError("memguard noise scale must be >= 0");
  }

  int num_classes() const override { return raw_->num_classes(); }
  int input_dim() const override { return raw_->input_dim(); }
  Exposure capability() const override { return Exposure::scores; }

  int predict_label(const SampleVector& x) override { return raw_->predict_label(x); }

  std::vector<double> predict_scores(const SampleVector& x) override {
    std::vector<double> scores = raw_->predict_scores(x);
    if (noise_scale_ == 0.0) return scores;
    int label = argmax_lowest(scores);
    // Noise stream keyed by the query content, so responses are
    // stateless and independent of request order.
    auto rng = seeded_rng(mix_seed(seed_, fnv1a64(x.features)));
    std::normal_distribution<double> noise(0.0, noise_scale_);
    std::vector<double> out(scores.size());
    for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
      double sum = 0.0;
      for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::max(0.0, scores[i] + noise(rng));
        sum += out[i];
      }
      if (sum <= 0.0) continue;
      for (double& v : out) v /= sum;
      if (argmax_lowest(out) == label) return out;
    }
    return scores;  // resampling cap hit; raw scores keep the label trivially
  }

  std::string describe() const override { return raw_->describe() + "+memguard"; }

 private:
  static constexpr int kMaxAttempts = 100;

  std::shared_ptr<PredictionBackend> raw_;
  double noise_scale_;
  std::uint64_t seed_;
};

}  // namespace

Oracle memguard_wrap(const Oracle& inner, double noise_scale, std::uint64_t seed) {
  if (inner.exposure() != Exposure::scores) {
    throw ExposureError("memguard wraps score-exposing oracles only");
  }
  return Oracle(std::make_shared<MemGuardBackend>(inner.backend(), noise_scale, seed),
                Exposure::scores);
}

}  // namespace mia
