#include "mia/remote.hpp"

#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "mia/error.hpp"

namespace mia {

using nlohmann::json;

struct RemoteBackend::Impl {
  explicit Impl(const std::string& url) : client(url) {
    client.set_connection_timeout(5, 0);
    client.set_read_timeout(30, 0);
  }
  httplib::Client client;
  std::mutex mu;  // httplib clients are not safe for concurrent requests
};

RemoteBackend::RemoteBackend(const std::string& base_url)
    : impl_(std::make_unique<Impl>(base_url)), base_url_(base_url) {
  httplib::Result res;
  {
    std::lock_guard<std::mutex> lock(impl_->mu);
    res = impl_->client.Get("/v1/meta");
  }
  if (!res) {
    throw TransportError("cannot reach oracle at " + base_url + ": " +
                         httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("meta request failed with status " + std::to_string(res->status));
  }
  try {
    json j = json::parse(res->body);
    num_classes_ = j.at("num_classes").get<int>();
    input_dim_ = j.at("input_dim").get<int>();
    capability_ = exposure_from_name(j.at("exposure").get<std::string>());
  } catch (const TransportError&) {
    throw;
  } catch (const std::exception& e) {
    throw TransportError(std::string("malformed meta response: ") + e.what());
  }
  if (num_classes_ < 2 || input_dim_ <= 0) {
    throw TransportError("meta response carries invalid dimensions");
  }
}

RemoteBackend::~RemoteBackend() = default;

namespace {

json post_predict(RemoteBackend::Impl& impl, const SampleVector& x) {
  json body;
  body["features"] = x.features;
  httplib::Result res;
  {
    std::lock_guard<std::mutex> lock(impl.mu);
    res = impl.client.Post("/v1/predict", body.dump(), "application/json");
  }
  if (!res) {
    throw TransportError("predict request failed: " + httplib::to_string(res.error()));
  }
  if (res->status < 200 || res->status >= 300) {
    throw TransportError("predict request failed with status " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body);
  } catch (const std::exception& e) {
    throw TransportError(std::string("malformed predict response: ") + e.what());
  }
}

}  // namespace

int RemoteBackend::predict_label(const SampleVector& x) {
  json j = post_predict(*impl_, x);
  if (!j.contains("label") || !j["label"].is_number_integer()) {
    throw TransportError("predict response is missing an integer label");
  }
  return j["label"].get<int>();
}

std::vector<double> RemoteBackend::predict_scores(const SampleVector& x) {
  if (capability_ != Exposure::scores) {
    throw ExposureError("remote oracle exposes labels only");
  }
  json j = post_predict(*impl_, x);
  if (!j.contains("scores") || !j["scores"].is_array()) {
    throw TransportError("predict response is missing scores");
  }
  auto scores = j["scores"].get<std::vector<double>>();
  if (static_cast<int>(scores.size()) != num_classes_) {
    throw TransportError("score vector length does not match num_classes");
  }
  return scores;
}

Oracle make_remote_oracle(const std::string& base_url) {
  auto backend = std::make_shared<RemoteBackend>(base_url);
  Exposure exposure = backend->capability();
  return Oracle(std::move(backend), exposure);
}

struct OracleServer::Impl {
  Impl(std::shared_ptr<const Model> model, Exposure exposure)
      : model(std::move(model)), exposure(exposure) {
    server.Get("/v1/meta", [this](const httplib::Request&, httplib::Response& res) {
      json j;
      j["num_classes"] = this->model->arch.num_classes;
      j["input_dim"] = this->model->arch.input_dim;
      j["exposure"] = exposure_name(this->exposure);
      res.set_content(j.dump(), "application/json");
    });
    server.Post("/v1/predict", [this](const httplib::Request& req, httplib::Response& res) {
      json reply;
      try {
        json body = json::parse(req.body);
        if (!body.contains("features") || !body["features"].is_array()) {
          throw std::runtime_error("body needs a 'features' array");
        }
        SampleVector x{body["features"].get<std::vector<double>>()};
        if (x.dim() != this->model->arch.input_dim) {
          throw std::runtime_error("features length does not match input_dim");
        }
        for (double v : x.features) {
          if (!std::isfinite(v)) throw std::runtime_error("features must be finite");
        }
        if (this->exposure == Exposure::scores) {
          auto scores = this->model->predict_scores(x);
          reply["label"] = argmax_lowest(scores);
          reply["scores"] = scores;
        } else {
          reply["label"] = this->model->predict_label(x);
        }
      } catch (const std::exception& e) {
        res.status = 400;
        json err;
        err["error"] = e.what();
        res.set_content(err.dump(), "application/json");
        return;
      }
      res.set_content(reply.dump(), "application/json");
    });
  }

  std::shared_ptr<const Model> model;
  Exposure exposure;
  httplib::Server server;
  std::thread worker;
};

OracleServer::OracleServer(std::shared_ptr<const Model> model, Exposure exposure)
    : impl_(std::make_unique<Impl>(std::move(model), exposure)) {
  if (!impl_->model) throw ConfigError("oracle server needs a model");
}

OracleServer::~OracleServer() {
  stop();
}

bool OracleServer::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int OracleServer::start_background(const std::string& host) {
  int port = impl_->server.bind_to_any_port(host);
  if (port <= 0) throw TransportError("cannot bind oracle server on " + host);
  impl_->worker = std::thread([this]() { impl_->server.listen_after_bind(); });
  for (int i = 0; i < 200 && !impl_->server.is_running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  if (!impl_->server.is_running()) throw TransportError("oracle server did not start");
  return port;
}

void OracleServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
  if (impl_ && impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace mia
