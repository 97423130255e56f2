#pragma once

#include <memory>
#include <string>

#include "mia/model.hpp"
#include "mia/oracle.hpp"

namespace mia {

// HTTP client for the prediction wire protocol:
//   GET  /v1/meta    -> {"num_classes": K, "input_dim": d, "exposure": ...}
//   POST /v1/predict {"features": [...]} -> {"label": l[, "scores": [...]]}
// Any non-2xx response or malformed payload raises TransportError.
class RemoteBackend : public PredictionBackend {
 public:
  explicit RemoteBackend(const std::string& base_url);
  ~RemoteBackend() override;

  int num_classes() const override { return num_classes_; }
  int input_dim() const override { return input_dim_; }
  Exposure capability() const override { return capability_; }
  int predict_label(const SampleVector& x) override;
  std::vector<double> predict_scores(const SampleVector& x) override;
  std::string describe() const override { return base_url_; }

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
  std::string base_url_;
  int num_classes_ = 0;
  int input_dim_ = 0;
  Exposure capability_ = Exposure::label_only;
};

// Exposure comes from the server's /v1/meta.
Oracle make_remote_oracle(const std::string& base_url);

// Reference server wrapping a model checkpoint.
class OracleServer {
 public:
  OracleServer(std::shared_ptr<const Model> model, Exposure exposure);
  ~OracleServer();

  // Blocks until stop(); false if the address could not be bound.
  bool listen(const std::string& host, int port);

  // Binds an ephemeral port and serves from a background thread;
  // returns the bound port.
  int start_background(const std::string& host);

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mia
