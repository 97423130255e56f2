#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mia {

// Dense feature vector with every coordinate in [0,1]. All attacks
// perturb and score values of this shape.
struct SampleVector {
  std::vector<double> features;

  int dim() const { return static_cast<int>(features.size()); }
};

struct LabeledSample {
  SampleVector x;
  int label = 0;
};

bool operator==(const SampleVector& a, const SampleVector& b);
bool operator==(const LabeledSample& a, const LabeledSample& b);

// Disjoint partitions of a labeled corpus. `train` holds the designated
// members, `test` the designated non-members, `shadow` the attacker data.
struct DatasetSplit {
  std::vector<LabeledSample> train;
  std::vector<LabeledSample> test;
  std::vector<LabeledSample> shadow;
  std::uint64_t seed = 0;
};

struct SplitSizes {
  int n_train = 0;
  int n_test = 0;
  int n_shadow = 0;
};

// Synthetic Gaussian-cluster dataset. When `means` is empty, per-class
// means are drawn uniformly in [0.2, 0.8]^dim from `seed`.
struct BlobConfig {
  int num_classes = 2;
  int dim = 2;
  std::vector<std::vector<double>> means;
  double stddev = 0.1;
  int count = 0;
  std::uint64_t seed = 0;
};

std::vector<std::vector<double>> default_blob_means(int num_classes, int dim,
                                                    std::uint64_t seed);

// Round-robin class assignment, Gaussian draw around the class mean,
// coordinate-wise clip to [0,1].
std::vector<LabeledSample> generate_blobs(const BlobConfig& config);

// Seeded shuffle, then disjoint prefixes of the given sizes.
DatasetSplit split_dataset(const std::vector<LabeledSample>& corpus, SplitSizes sizes,
                           std::uint64_t seed);

// Row format: f_0,...,f_{d-1},label. A non-numeric first field on the
// first line is treated as a header and skipped. If num_classes > 0,
// labels are validated against it.
std::vector<LabeledSample> load_csv(const std::string& path, int num_classes = -1);
void save_csv(const std::vector<LabeledSample>& samples, const std::string& path);

int num_classes_of(const std::vector<LabeledSample>& samples);

// Content digest of the materialized split (sizes, seed, all features
// and labels); reports carry it to identify the dataset.
std::string split_digest(const DatasetSplit& split);

}  // namespace mia
