#include "mia/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kProbFloor = 1e-12;

struct LayerGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;

  explicit LayerGrads(const Model& m) {
    weights.reserve(m.layers.size());
    bias.reserve(m.layers.size());
    for (const auto& l : m.layers) {
      weights.emplace_back(l.weights.size(), 0.0);
      bias.emplace_back(l.bias.size(), 0.0);
    }
  }

  void reset() {
    for (auto& w : weights) std::fill(w.begin(), w.end(), 0.0);
    for (auto& b : bias) std::fill(b.begin(), b.end(), 0.0);
  }
};

// Per-sample forward/backward scratch, reused across the whole run.
struct Workspace {
  std::vector<std::vector<double>> acts;   // acts[0] = input, then hidden outputs
  std::vector<std::vector<double>> preact; // pre-relu values per hidden layer
  std::vector<std::vector<double>> masks;  // dropout masks (scaled), per hidden layer
  std::vector<double> logits;
  std::vector<double> probs;
  std::vector<double> delta;
  std::vector<double> delta_prev;

  explicit Workspace(const Model& m) {
    std::size_t n_hidden = m.layers.size() - 1;
    acts.resize(m.layers.size());
    acts[0].resize(static_cast<std::size_t>(m.arch.input_dim));
    preact.resize(n_hidden);
    masks.resize(n_hidden);
    for (std::size_t l = 0; l < n_hidden; ++l) {
      preact[l].resize(static_cast<std::size_t>(m.layers[l].out));
      masks[l].assign(static_cast<std::size_t>(m.layers[l].out), 1.0);
      if (l + 1 < m.layers.size()) acts[l + 1].resize(static_cast<std::size_t>(m.layers[l].out));
    }
    logits.resize(static_cast<std::size_t>(m.arch.num_classes));
    probs.resize(static_cast<std::size_t>(m.arch.num_classes));
  }
};

void dense_forward(const DenseLayer& layer, const std::vector<double>& in,
                   std::vector<double>& out) {
  for (int r = 0; r < layer.out; ++r) {
    const double* wrow = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
    double acc = layer.bias[static_cast<std::size_t>(r)];
    for (int c = 0; c < layer.in; ++c) acc += wrow[c] * in[static_cast<std::size_t>(c)];
    out[static_cast<std::size_t>(r)] = acc;
  }
}

// Forward pass storing hidden activations; masks are applied when
// use_masks is set (training with dropout).
void forward_traced(const Model& m, Workspace& ws, bool use_masks) {
  std::size_t n_hidden = m.layers.size() - 1;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    dense_forward(m.layers[l], ws.acts[l], ws.preact[l]);
    auto& h = ws.acts[l + 1];
    for (std::size_t i = 0; i < ws.preact[l].size(); ++i) {
      double v = ws.preact[l][i] > 0.0 ? ws.preact[l][i] : 0.0;
      if (use_masks) v *= ws.masks[l][i];
      h[i] = v;
    }
  }
  dense_forward(m.layers.back(), ws.acts[n_hidden], ws.logits);
}

double log_sum_exp(const std::vector<double>& z) {
  double m = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (double v : z) s += std::exp(v - m);
  return m + std::log(s);
}

// Returns the sample's cross-entropy loss and accumulates gradients
// scaled by `scale` into `grads`.
double backward_sample(const Model& m, Workspace& ws, int label, bool use_masks,
                       double scale, LayerGrads& grads) {
  std::size_t n_hidden = m.layers.size() - 1;
  double lse = log_sum_exp(ws.logits);
  double loss = -(ws.logits[static_cast<std::size_t>(label)] - lse);
  for (std::size_t i = 0; i < ws.probs.size(); ++i) {
    ws.probs[i] = std::exp(ws.logits[i] - lse);
  }

  ws.delta = ws.probs;
  ws.delta[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t l = m.layers.size(); l-- > 0;) {
    const DenseLayer& layer = m.layers[l];
    const auto& in = ws.acts[l];
    auto& gw = grads.weights[l];
    auto& gb = grads.bias[l];
    for (int r = 0; r < layer.out; ++r) {
      double d = ws.delta[static_cast<std::size_t>(r)] * scale;
      gb[static_cast<std::size_t>(r)] += d;
      double* gw_row = gw.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) gw_row[c] += d * in[static_cast<std::size_t>(c)];
    }
    if (l == 0) break;
    ws.delta_prev.assign(static_cast<std::size_t>(layer.in), 0.0);
    for (int r = 0; r < layer.out; ++r) {
      double d = ws.delta[static_cast<std::size_t>(r)];
      if (d == 0.0) continue;
      const double* wrow = layer.weights.data() + static_cast<std::size_t>(r) * layer.in;
      for (int c = 0; c < layer.in; ++c) ws.delta_prev[static_cast<std::size_t>(c)] += d * wrow[c];
    }
    // through the dropout mask and the rectifier of hidden layer l-1
    std::size_t h = l - 1;
    ws.delta.assign(ws.delta_prev.begin(), ws.delta_prev.end());
    for (std::size_t i = 0; i < ws.delta.size(); ++i) {
      double gate = ws.preact[h][i] > 0.0 ? 1.0 : 0.0;
      if (use_masks) gate *= ws.masks[h][i];
      ws.delta[i] *= gate;
    }
  }
  (void)n_hidden;
  return loss;
}

void add_penalty_gradient(const Model& m, const DefenseConfig& defense, LayerGrads& grads) {
  if (defense.kind == DefenseKind::l1) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      const auto& w = m.layers[l].weights;
      auto& g = grads.weights[l];
      for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] > 0.0) g[i] += defense.value;
        else if (w[i] < 0.0) g[i] -= defense.value;
      }
    }
  } else if (defense.kind == DefenseKind::l2) {
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      const auto& w = m.layers[l].weights;
      auto& g = grads.weights[l];
      for (std::size_t i = 0; i < w.size(); ++i) g[i] += 2.0 * defense.value * w[i];
    }
  }
}

double penalty_loss(const Model& m, const DefenseConfig& defense) {
  if (defense.kind != DefenseKind::l1 && defense.kind != DefenseKind::l2) return 0.0;
  double acc = 0.0;
  for (const auto& layer : m.layers) {
    for (double w : layer.weights) {
      acc += defense.kind == DefenseKind::l1 ? std::abs(w) : w * w;
    }
  }
  return defense.value * acc;
}

void check_sample_shapes(const MlpArchitecture& arch, const std::vector<LabeledSample>& data) {
  for (const auto& s : data) {
    if (s.x.dim() != arch.input_dim) {
      throw ShapeError("sample dim " + std::to_string(s.x.dim()) +
                       " does not match model input dim " + std::to_string(arch.input_dim));
    }
    if (s.label < 0 || s.label >= arch.num_classes) {
      throw TrainError("label " + std::to_string(s.label) + " outside [0, " +
                       std::to_string(arch.num_classes) + ")");
    }
  }
}

}  // namespace

void MlpArchitecture::validate() const {
  if (input_dim <= 0) throw ConfigError("input_dim must be positive");
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (hidden.empty()) throw ConfigError("need at least one hidden layer");
  for (int w : hidden) {
    if (w <= 0) throw ConfigError("hidden widths must be positive");
  }
}

void DefenseConfig::validate() const {
  switch (kind) {
    case DefenseKind::l1:
    case DefenseKind::l2:
      if (value < 0.0) throw ConfigError("regularization lambda must be >= 0");
      break;
    case DefenseKind::dropout:
      if (!(value >= 0.0 && value < 1.0)) throw ConfigError("dropout rho must be in [0,1)");
      break;
    case DefenseKind::grad_noise:
      if (value < 0.0) throw ConfigError("gradient noise beta must be >= 0");
      break;
    case DefenseKind::none:
    case DefenseKind::augment_flip:
      break;
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  defense.validate();
}

std::vector<double> softmax(const std::vector<double>& logits) {
  double lse = log_sum_exp(logits);
  std::vector<double> p(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) p[i] = std::exp(logits[i] - lse);
  return p;
}

int argmax_lowest(const std::vector<double>& values) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(values.size()); ++i) {
    if (values[static_cast<std::size_t>(i)] > values[static_cast<std::size_t>(best)]) best = i;
  }
  return best;
}

std::vector<double> Model::logits(const SampleVector& x) const {
  if (x.dim() != arch.input_dim) {
    throw ShapeError("input dim " + std::to_string(x.dim()) + " != model dim " +
                     std::to_string(arch.input_dim));
  }
  std::vector<double> cur = x.features;
  std::vector<double> next;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    next.resize(static_cast<std::size_t>(layers[l].out));
    dense_forward(layers[l], cur, next);
    if (l + 1 < layers.size()) {
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    }
    cur.swap(next);
  }
  return cur;
}

std::vector<double> Model::predict_scores(const SampleVector& x) const {
  return softmax(logits(x));
}

int Model::predict_label(const SampleVector& x) const { return argmax_lowest(logits(x)); }

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weights.size() + l.bias.size();
  return n;
}

Model init_model(const MlpArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  Model m;
  m.arch = arch;
  auto rng = seeded_rng(mix_seed(seed, 0x1417u));
  int prev = arch.input_dim;
  std::vector<int> outs = arch.hidden;
  outs.push_back(arch.num_classes);
  for (int out : outs) {
    DenseLayer layer;
    layer.in = prev;
    layer.out = out;
    layer.weights.resize(static_cast<std::size_t>(prev) * static_cast<std::size_t>(out));
    layer.bias.assign(static_cast<std::size_t>(out), 0.0);
    double limit = std::sqrt(6.0 / (prev + out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& w : layer.weights) w = u(rng);
    m.layers.push_back(std::move(layer));
    prev = out;
  }
  return m;
}

Model train(const MlpArchitecture& arch, const std::vector<LabeledSample>& data,
            const TrainConfig& cfg) {
  arch.validate();
  cfg.validate();
  if (data.empty()) throw TrainError("training data is empty");
  check_sample_shapes(arch, data);

  Model model = init_model(arch, cfg.seed);
  LayerGrads grads(model);
  LayerGrads adam_m(model);
  LayerGrads adam_v(model);
  Workspace ws(model);

  auto shuffle_rng = seeded_rng(mix_seed(cfg.seed, 0x01u));
  auto dropout_rng = seeded_rng(mix_seed(cfg.seed, 0x02u));
  auto augment_rng = seeded_rng(mix_seed(cfg.seed, 0x03u));
  auto noise_rng = seeded_rng(mix_seed(cfg.seed, 0x04u));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const bool use_dropout =
      cfg.defense.kind == DefenseKind::dropout && cfg.defense.value > 0.0;
  const bool use_flip = cfg.defense.kind == DefenseKind::augment_flip;
  const bool use_noise =
      cfg.defense.kind == DefenseKind::grad_noise && cfg.defense.value > 0.0;
  const double keep = 1.0 - cfg.defense.value;

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  std::uint64_t step = 0;
  double last_epoch_loss = 0.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      double scale = 1.0 / static_cast<double>(end - start);
      grads.reset();
      double batch_loss = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const LabeledSample& s = data[order[k]];
        ws.acts[0] = s.x.features;
        if (use_flip && unit(augment_rng) < 0.5) {
          std::reverse(ws.acts[0].begin(), ws.acts[0].end());
        }
        if (use_dropout) {
          for (auto& mask : ws.masks) {
            for (double& v : mask) v = unit(dropout_rng) < cfg.defense.value ? 0.0 : 1.0 / keep;
          }
        }
        forward_traced(model, ws, use_dropout);
        batch_loss += scale * backward_sample(model, ws, s.label, use_dropout, scale, grads);
      }
      add_penalty_gradient(model, cfg.defense, grads);
      if (use_noise) {
        std::normal_distribution<double> noise(0.0, cfg.defense.value);
        for (auto& g : grads.weights) {
          for (double& v : g) v += noise(noise_rng);
        }
        for (auto& g : grads.bias) {
          for (double& v : g) v += noise(noise_rng);
        }
      }
      if (!std::isfinite(batch_loss)) {
        throw DivergenceError("training loss is not finite", epoch);
      }
      epoch_loss += batch_loss;
      ++step;
      double corr1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(step));
      double corr2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(step));
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        auto adam_update = [&](std::vector<double>& params, std::vector<double>& g,
                               std::vector<double>& mm, std::vector<double>& vv) {
          for (std::size_t i = 0; i < params.size(); ++i) {
            mm[i] = kAdamBeta1 * mm[i] + (1.0 - kAdamBeta1) * g[i];
            vv[i] = kAdamBeta2 * vv[i] + (1.0 - kAdamBeta2) * g[i] * g[i];
            double mhat = mm[i] / corr1;
            double vhat = vv[i] / corr2;
            params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + kAdamEps);
          }
        };
        adam_update(model.layers[l].weights, grads.weights[l], adam_m.weights[l],
                    adam_v.weights[l]);
        adam_update(model.layers[l].bias, grads.bias[l], adam_m.bias[l], adam_v.bias[l]);
      }
    }
    last_epoch_loss = epoch_loss;
  }

  model.meta.epochs_run = cfg.epochs;
  model.meta.train_accuracy = evaluate_accuracy(model, data);
  model.meta.final_train_loss =
      cfg.epochs > 0 ? last_epoch_loss / std::ceil(static_cast<double>(data.size()) /
                                                   static_cast<double>(cfg.batch_size))
                     : training_loss(model, data, DefenseConfig{});
  return model;
}

double evaluate_accuracy(const Model& model, const std::vector<LabeledSample>& data) {
  if (data.empty()) throw MetricError("accuracy over an empty set");
  std::size_t correct = 0;
  for (const auto& s : data) {
    if (model.predict_label(s.x) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void record_generalization(Model& model, const std::vector<LabeledSample>& test) {
  model.meta.test_accuracy = evaluate_accuracy(model, test);
  model.meta.overfit_gap = model.meta.train_accuracy - model.meta.test_accuracy;
}

double training_loss(const Model& model, std::span<const LabeledSample> batch,
                     const DefenseConfig& defense) {
  if (batch.empty()) throw TrainError("loss over an empty batch");
  double acc = 0.0;
  for (const auto& s : batch) {
    auto p = model.predict_scores(s.x);
    acc += -std::log(std::max(p[static_cast<std::size_t>(s.label)], kProbFloor));
  }
  return acc / static_cast<double>(batch.size()) + penalty_loss(model, defense);
}

std::vector<double> training_gradient(const Model& model,
                                      std::span<const LabeledSample> batch,
                                      const DefenseConfig& defense) {
  if (batch.empty()) throw TrainError("gradient over an empty batch");
  LayerGrads grads(model);
  Workspace ws(model);
  double scale = 1.0 / static_cast<double>(batch.size());
  for (const auto& s : batch) {
    ws.acts[0] = s.x.features;
    forward_traced(model, ws, false);
    backward_sample(model, ws, s.label, false, scale, grads);
  }
  add_penalty_gradient(model, defense, grads);
  std::vector<double> flat;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    flat.insert(flat.end(), grads.weights[l].begin(), grads.weights[l].end());
    flat.insert(flat.end(), grads.bias[l].begin(), grads.bias[l].end());
  }
  return flat;
}

std::vector<double> flatten_parameters(const Model& model) {
  std::vector<double> flat;
  flat.reserve(model.parameter_count());
  for (const auto& l : model.layers) {
    flat.insert(flat.end(), l.weights.begin(), l.weights.end());
    flat.insert(flat.end(), l.bias.begin(), l.bias.end());
  }
  return flat;
}

void set_parameters(Model& model, const std::vector<double>& flat) {
  if (flat.size() != model.parameter_count()) {
    throw ShapeError("parameter vector size mismatch");
  }
  std::size_t pos = 0;
  for (auto& l : model.layers) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + l.weights.size()),
              l.weights.begin());
    pos += l.weights.size();
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(pos),
              flat.begin() + static_cast<std::ptrdiff_t>(pos + l.bias.size()),
              l.bias.begin());
    pos += l.bias.size();
  }
}

void save_model(const Model& model, const std::string& path) {
  nlohmann::ordered_json j;
  j["format"] = "mia-model";
  j["version"] = 1;
  j["architecture"] = {{"input_dim", model.arch.input_dim},
                       {"hidden", model.arch.hidden},
                       {"num_classes", model.arch.num_classes}};
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"in", l.in}, {"out", l.out}, {"weights", l.weights}, {"bias", l.bias}});
  }
  j["layers"] = std::move(layers);
  j["metadata"] = {{"train_accuracy", model.meta.train_accuracy},
                   {"test_accuracy", model.meta.test_accuracy},
                   {"overfit_gap", model.meta.overfit_gap},
                   {"final_train_loss", model.meta.final_train_loss},
                   {"epochs_run", model.meta.epochs_run}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw IoError("invalid model file " + path + ": " + e.what());
  }
  if (j.value("format", "") != "mia-model") throw IoError("not a model checkpoint: " + path);
  if (j.value("version", 0) != 1) throw IoError("unsupported checkpoint version");
  Model m;
  const auto& arch = j.at("architecture");
  m.arch.input_dim = arch.at("input_dim").get<int>();
  m.arch.hidden = arch.at("hidden").get<std::vector<int>>();
  m.arch.num_classes = arch.at("num_classes").get<int>();
  m.arch.validate();
  for (const auto& lj : j.at("layers")) {
    DenseLayer l;
    l.in = lj.at("in").get<int>();
    l.out = lj.at("out").get<int>();
    l.weights = lj.at("weights").get<std::vector<double>>();
    l.bias = lj.at("bias").get<std::vector<double>>();
    if (l.weights.size() != static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out) ||
        l.bias.size() != static_cast<std::size_t>(l.out)) {
      throw IoError("layer shape mismatch in " + path);
    }
    m.layers.push_back(std::move(l));
  }
  if (j.contains("metadata")) {
    const auto& md = j.at("metadata");
    m.meta.train_accuracy = md.value("train_accuracy", 0.0);
    m.meta.test_accuracy = md.value("test_accuracy", -1.0);
    m.meta.overfit_gap = md.value("overfit_gap", 0.0);
    m.meta.final_train_loss = md.value("final_train_loss", 0.0);
    m.meta.epochs_run = md.value("epochs_run", 0);
  }
  return m;
}

std::string model_digest(const Model& model) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  int dims[2] = {model.arch.input_dim, model.arch.num_classes};
  h = fnv1a64(dims, sizeof(dims), h);
  for (int w : model.arch.hidden) h = fnv1a64(&w, sizeof(w), h);
  for (const auto& l : model.layers) {
    h = fnv1a64(l.weights, h);
    h = fnv1a64(l.bias, h);
  }
  return hex64(h);
}

}  // namespace mia
