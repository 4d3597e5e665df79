// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mcm/experiment.hpp"

namespace CLI {
class App;
}

namespace mcm::cli {

struct DataOptions {
  std::string train_path;
  std::string test_path;
  std::string labels_path;  // one class name per line; empty means the 12 default classes
  std::size_t text_column = 0;
  std::size_t label_column = 1;
  bool header = false;
};

struct TrainOptions {
  DataOptions data;
  std::string out = "run";
  std::uint64_t seed = 1;
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double lr = 0.002;
  std::string optimizer = "adam";
  double dropout = 0.2;
  std::string embedding = "random";
  std::size_t embedding_dim = 0;
  bool attention = false;
  std::size_t max_len = 0;
  std::size_t min_count = 2;
  std::string select_on = "test";
  std::size_t kernel1 = 1;
  std::size_t kernel2 = 2;
  std::size_t filters = 128;
  std::size_t lstm_hidden = 128;
  std::size_t dense1 = 128;
  std::size_t dense2 = 64;
  bool detach_features = false;
  std::size_t skipgram_epochs = 5;
  std::size_t skipgram_window = 5;
  // Grid search, matrix command only.
  bool grid = false;
  std::vector<std::size_t> grid_kernel1{1, 2, 3, 4, 5};
  std::vector<std::size_t> grid_kernel2{1, 2, 3, 4, 5};
  std::vector<double> grid_dropout{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::string> grid_optimizer{"adam", "adadelta", "sgd"};
  std::vector<double> grid_lr{0.001, 0.002, 0.003, 0.004, 0.005};

  RunConfig run_config() const;
  GridSpec grid_spec() const;
};

void add_data_options(CLI::App& app, DataOptions& o, bool need_train);
void add_train_options(CLI::App& app, TrainOptions& o);

/// Reads "key=value" lines ('#' starts a comment) and feeds each key to the
/// long option of the same name unless that option was given on the command
/// line. Underscores in keys are read as dashes. Unknown keys throw ConfigError.
void apply_config_file(CLI::App& app, const std::filesystem::path& path);

LabelSet read_labels(const DataOptions& o);
TsvLayout layout_of(const DataOptions& o);

}  // namespace mcm::cli
