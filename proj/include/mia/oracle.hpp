#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mia/data.hpp"
#include "mia/model.hpp"

namespace mia {

enum class Exposure { label_only, scores };

std::string exposure_name(Exposure e);
Exposure exposure_from_name(const std::string& name);

// The raw prediction function behind an Oracle. Implementations must be
// safe for concurrent calls.
class PredictionBackend {
 public:
  virtual ~PredictionBackend() = default;
  virtual int num_classes() const = 0;
  virtual int input_dim() const = 0;
  // The most the backend can reveal; an Oracle may expose less.
  virtual Exposure capability() const = 0;
  virtual int predict_label(const SampleVector& x) = 0;
  virtual std::vector<double> predict_scores(const SampleVector& x) = 0;
  virtual std::string describe() const = 0;
};

class LocalModelBackend : public PredictionBackend {
 public:
  explicit LocalModelBackend(std::shared_ptr<const Model> model);
  int num_classes() const override;
  int input_dim() const override;
  Exposure capability() const override { return Exposure::scores; }
  int predict_label(const SampleVector& x) override;
  std::vector<double> predict_scores(const SampleVector& x) override;
  std::string describe() const override;

 private:
  std::shared_ptr<const Model> model_;
};

// Query-counted black-box handle over a backend. Every prediction
// request (label or scores) raises the counter by exactly one; a
// label-only oracle never returns a score vector through any path.
class Oracle {
 public:
  Oracle(std::shared_ptr<PredictionBackend> backend, Exposure exposure);

  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  int num_classes() const { return backend_->num_classes(); }
  int input_dim() const { return backend_->input_dim(); }
  Exposure exposure() const { return exposure_; }
  std::string id() const { return backend_->describe(); }

  int query_label(const SampleVector& x);
  std::vector<double> query_scores(const SampleVector& x);

  std::uint64_t queries_used() const { return counter_.load(); }

  // Optional hard cap; exceeding it raises BudgetError with the count.
  void attach_budget(std::uint64_t max_queries);
  void clear_budget();

  std::shared_ptr<PredictionBackend> backend() const { return backend_; }

 private:
  void charge();

  std::shared_ptr<PredictionBackend> backend_;
  Exposure exposure_;
  std::atomic<std::uint64_t> counter_{0};
  std::optional<std::uint64_t> budget_;
};

Oracle make_local_oracle(std::shared_ptr<const Model> model, Exposure exposure);

// Label-preserving score distortion: seeded noise is added to the score
// vector, the result is renormalized onto the simplex, and any draw that
// would change the argmax is resampled. Labels pass through untouched.
Oracle memguard_wrap(const Oracle& inner, double noise_scale, std::uint64_t seed);

}  // namespace mia
