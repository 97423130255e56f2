#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mia/audit.hpp"
#include "mia/boundary.hpp"
#include "mia/data.hpp"
#include "mia/model.hpp"
#include "mia/smoothing.hpp"
#include "mia/transfer.hpp"

namespace mia {

struct DatasetConfig {
  enum class Kind { blobs, csv };
  Kind kind = Kind::blobs;
  BlobConfig blob{4, 20, {}, 0.2, 0, 0};
  std::string path;
  SplitSizes split{100, 200, 2000};
  std::uint64_t seed = 0;
};

// Everything the CLI can be asked to do, from one JSON document.
struct AuditConfig {
  DatasetConfig dataset;
  MlpArchitecture arch{0, {64, 64}, 0};  // dims resolved when materialized
  TrainConfig train;
  TransferConfig transfer;
  BoundaryAttackConfig boundary;
  SmoothingConfig smoothing;
  std::vector<int> ladder_train_sizes{400, 200, 100, 50, 25, 12};
  int defense_train_size = 100;
  std::vector<DefenseConfig> defenses;
  std::vector<std::uint64_t> sweep_budgets{1, 131, 500, 2000};
  std::uint64_t seed = 0;
  std::string digest;  // of the source JSON text
};

AuditConfig default_config();
AuditConfig config_from_json_text(const std::string& text);
AuditConfig load_config(const std::string& path);

// Generated blobs or loaded CSV, split into the three partitions.
struct MaterializedDataset {
  DatasetSplit split;
  MlpArchitecture arch;  // config widths with dims from the data
};

MaterializedDataset materialize_dataset(const AuditConfig& cfg);

LadderConfig ladder_from_config(const AuditConfig& cfg);

}  // namespace mia
