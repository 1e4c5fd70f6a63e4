#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "seqkernel/ridge.hpp"
#include "seqkernel/table.hpp"
#include "seqkernel/timevarying.hpp"

namespace seqkernel {

struct LambdaGridConfig {
  double min = 1e-6;
  double max = 1.0;
  int count = 30;
};

// Settings shared by every subcommand. Empty schema means infer from column names.
struct ExperimentConfig {
  DataSchema schema;
  LambdaGridConfig lambda_grid;
  std::optional<double> lambda;  // fixed penalty for every ridge stage; empty: tune
  Criterion criterion = Criterion::Loocv;
  int folds = 5;
  double level = 0.95;
  int grid_points = 20;
  std::vector<double> grid;  // explicit treatment grid; empty: percentile grid
  std::optional<std::uint64_t> seed;
  std::string output;
  bool markov = false;
  AltPenaltyScale alt_scale = AltPenaltyScale::AltSampleSize;
  int herd_samples = 100;
  int threads = 1;

  TuningOptions tuning() const;
  Penalty penalty() const;
  void validate() const;
};

bool operator==(const ColumnDecl& a, const ColumnDecl& b);
bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

std::string to_json_string(const ExperimentConfig& config, int indent = 2);
// Unknown keys and malformed values raise ConfigError; absent keys keep defaults.
ExperimentConfig from_json_string(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& config, const std::string& path);

}  // namespace seqkernel
