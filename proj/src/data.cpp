#include "mia/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "mia/error.hpp"
#include "mia/rng.hpp"

namespace mia {

bool operator==(const SampleVector& a, const SampleVector& b) {
  return a.features == b.features;
}

bool operator==(const LabeledSample& a, const LabeledSample& b) {
  return a.label == b.label && a.x == b.x;
}

std::vector<std::vector<double>> default_blob_means(int num_classes, int dim,
                                                    std::uint64_t seed) {
  auto rng = seeded_rng(mix_seed(seed, 0xb10bu));
  std::uniform_real_distribution<double> u(0.2, 0.8);
  std::vector<std::vector<double>> means(static_cast<std::size_t>(num_classes));
  for (auto& m : means) {
    m.resize(static_cast<std::size_t>(dim));
    for (double& v : m) v = u(rng);
  }
  return means;
}

std::vector<LabeledSample> generate_blobs(const BlobConfig& config) {
  if (config.num_classes < 2) {
    throw ConfigError("blob generation needs at least 2 classes");
  }
  if (config.count <= 0) throw ConfigError("blob sample count must be positive");
  if (config.dim <= 0) throw ConfigError("blob dimension must be positive");
  if (!(config.stddev > 0.0)) throw ConfigError("blob stddev must be positive");

  auto means = config.means.empty()
                   ? default_blob_means(config.num_classes, config.dim, config.seed)
                   : config.means;
  if (static_cast<int>(means.size()) != config.num_classes) {
    throw ConfigError("blob means count does not match num_classes");
  }
  for (const auto& m : means) {
    if (static_cast<int>(m.size()) != config.dim) {
      throw ConfigError("blob mean dimension does not match dim");
    }
  }

  auto rng = seeded_rng(mix_seed(config.seed, 0x5a3fu));
  std::normal_distribution<double> noise(0.0, config.stddev);
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(config.count));
  for (int i = 0; i < config.count; ++i) {
    int cls = i % config.num_classes;
    LabeledSample s;
    s.label = cls;
    s.x.features.resize(static_cast<std::size_t>(config.dim));
    const auto& mean = means[static_cast<std::size_t>(cls)];
    for (int j = 0; j < config.dim; ++j) {
      double v = mean[static_cast<std::size_t>(j)] + noise(rng);
      s.x.features[static_cast<std::size_t>(j)] = std::clamp(v, 0.0, 1.0);
    }
    out.push_back(std::move(s));
  }
  return out;
}

DatasetSplit split_dataset(const std::vector<LabeledSample>& corpus, SplitSizes sizes,
                           std::uint64_t seed) {
  if (sizes.n_train < 0 || sizes.n_test < 0 || sizes.n_shadow < 0) {
    throw SizeError("split sizes must be non-negative");
  }
  std::size_t total = static_cast<std::size_t>(sizes.n_train) +
                      static_cast<std::size_t>(sizes.n_test) +
                      static_cast<std::size_t>(sizes.n_shadow);
  if (total > corpus.size()) {
    throw SizeError("split sizes exceed corpus (" + std::to_string(total) + " > " +
                    std::to_string(corpus.size()) + ")");
  }
  std::vector<LabeledSample> shuffled = corpus;
  auto rng = seeded_rng(mix_seed(seed, 0x5111u));
  std::shuffle(shuffled.begin(), shuffled.end(), rng);

  DatasetSplit split;
  split.seed = seed;
  auto it = shuffled.begin();
  split.train.assign(it, it + sizes.n_train);
  it += sizes.n_train;
  split.test.assign(it, it + sizes.n_test);
  it += sizes.n_test;
  split.shadow.assign(it, it + sizes.n_shadow);
  return split;
}

namespace {

bool parse_double_field(const std::string& field, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(field, &pos);
    while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
    return pos == field.size();
  } catch (const std::exception&) {
    return false;
  }
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  std::stringstream ss(line);
  while (std::getline(ss, cur, ',')) fields.push_back(cur);
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

}  // namespace

std::vector<LabeledSample> load_csv(const std::string& path, int num_classes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<LabeledSample> out;
  std::string line;
  std::size_t row = 0;
  std::size_t dim = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (first_content_line) {
      double probe;
      if (!parse_double_field(fields.front(), probe)) {
        first_content_line = false;
        continue;  // header line
      }
    }
    first_content_line = false;
    if (fields.size() < 2) throw ParseError("row needs features and a label", row);
    if (dim == 0) {
      dim = fields.size() - 1;
    } else if (fields.size() - 1 != dim) {
      throw ParseError("row has " + std::to_string(fields.size() - 1) +
                           " features, expected " + std::to_string(dim),
                       row);
    }
    LabeledSample s;
    s.x.features.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      double v;
      if (!parse_double_field(fields[i], v)) {
        throw ParseError("feature '" + fields[i] + "' is not a number", row);
      }
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ParseError("feature " + std::to_string(v) + " outside [0,1]", row);
      }
      s.x.features[i] = v;
    }
    const std::string& label_field = fields.back();
    double label_value;
    if (!parse_double_field(label_field, label_value) ||
        label_value != std::floor(label_value)) {
      throw ParseError("label '" + label_field + "' is not an integer", row);
    }
    s.label = static_cast<int>(label_value);
    if (s.label < 0) throw ParseError("label must be non-negative", row);
    if (num_classes > 0 && s.label >= num_classes) {
      throw ParseError("label " + std::to_string(s.label) + " >= num_classes " +
                           std::to_string(num_classes),
                       row);
    }
    out.push_back(std::move(s));
  }
  return out;
}

void save_csv(const std::vector<LabeledSample>& samples, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  char buf[32];
  for (const auto& s : samples) {
    for (double v : s.x.features) {
      std::snprintf(buf, sizeof(buf), "%.9f", v);
      out << buf << ',';
    }
    out << s.label << '\n';
  }
  if (!out) throw IoError("write failed for " + path);
}

int num_classes_of(const std::vector<LabeledSample>& samples) {
  int max_label = -1;
  for (const auto& s : samples) max_label = std::max(max_label, s.label);
  return max_label + 1;
}

std::string split_digest(const DatasetSplit& split) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  std::uint64_t sizes[4] = {split.train.size(), split.test.size(), split.shadow.size(),
                            split.seed};
  h = fnv1a64(sizes, sizeof(sizes), h);
  auto add = [&h](const std::vector<LabeledSample>& part) {
    for (const auto& s : part) {
      h = fnv1a64(s.x.features, h);
      h = fnv1a64(&s.label, sizeof(s.label), h);
    }
  };
  add(split.train);
  add(split.test);
  add(split.shadow);
  return hex64(h);
}

}  // namespace mia
