#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mia/data.hpp"

namespace mia {

// Fully connected rectifier network: input -> hidden widths -> K logits.
struct MlpArchitecture {
  int input_dim = 0;
  std::vector<int> hidden{64, 64};
  int num_classes = 2;

  void validate() const;
};

enum class DefenseKind { none, l1, l2, dropout, grad_noise, augment_flip };

// `value` is lambda for l1/l2, rho for dropout, beta for grad_noise;
// unused for none and augment_flip.
struct DefenseConfig {
  DefenseKind kind = DefenseKind::none;
  double value = 0.0;

  void validate() const;
};

struct TrainConfig {
  int epochs = 200;
  int batch_size = 128;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  DefenseConfig defense;

  void validate() const;
};

struct TrainingMetadata {
  double train_accuracy = 0.0;
  double test_accuracy = -1.0;  // negative until recorded
  double overfit_gap = 0.0;
  double final_train_loss = 0.0;
  int epochs_run = 0;
};

struct DenseLayer {
  int in = 0;
  int out = 0;
  std::vector<double> weights;  // row-major, out x in
  std::vector<double> bias;     // out
};

struct Model {
  MlpArchitecture arch;
  std::vector<DenseLayer> layers;
  TrainingMetadata meta;

  std::vector<double> logits(const SampleVector& x) const;
  std::vector<double> predict_scores(const SampleVector& x) const;
  int predict_label(const SampleVector& x) const;
  std::size_t parameter_count() const;
};

std::vector<double> softmax(const std::vector<double>& logits);
int argmax_lowest(const std::vector<double>& values);

// Glorot-uniform weights, zero biases, all drawn from `seed`.
Model init_model(const MlpArchitecture& arch, std::uint64_t seed);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) on mean cross entropy plus the
// configured defense. Seeded minibatch shuffle per epoch.
Model train(const MlpArchitecture& arch, const std::vector<LabeledSample>& data,
            const TrainConfig& cfg);

double evaluate_accuracy(const Model& model, const std::vector<LabeledSample>& data);

// Fills test accuracy and the overfitting gap (train acc - test acc).
void record_generalization(Model& model, const std::vector<LabeledSample>& test);

// Deterministic full-batch objective and gradient (no dropout masks, no
// gradient noise): mean cross entropy plus the l1/l2 penalty if set.
// Gradient layout matches flatten_parameters.
double training_loss(const Model& model, std::span<const LabeledSample> batch,
                     const DefenseConfig& defense);
std::vector<double> training_gradient(const Model& model,
                                      std::span<const LabeledSample> batch,
                                      const DefenseConfig& defense);

std::vector<double> flatten_parameters(const Model& model);
void set_parameters(Model& model, const std::vector<double>& flat);

// Checkpoint file: versioned JSON with the architecture and row-major
// weight arrays; doubles round-trip losslessly.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// Digest of architecture and weights; used as the model id in reports.
std::string model_digest(const Model& model);

}  // namespace mia
