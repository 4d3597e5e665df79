// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mcm/data.hpp"
#include "mcm/embeddings.hpp"
#include "mcm/trainer.hpp"

namespace mcm {

/// Everything one training run needs besides the data.
struct RunConfig {
  TrainConfig train;
  /// Layer widths and kernels; vocab, classes, length, embedding and
  /// attention fields are filled in per run.
  ModelConfig widths;
  std::size_t min_count = 2;
  std::size_t max_len = 0;        // 0: derived from the training texts
  std::size_t embedding_dim = 0;  // 0: per-strategy default
  SkipGramConfig skipgram;
};

struct PreparedData {
  LabelSet labels;
  Vocabulary vocab;
  std::vector<std::vector<std::size_t>> train_tokens;  // unpadded ids, for skip-gram
  EncodedCorpus train;
  EncodedCorpus test;
};

/// Builds the vocabulary from `train` only and encodes both splits.
PreparedData prepare_data(std::span<const LabeledText> train, std::span<const LabeledText> test, const LabelSet& labels,
                          std::size_t min_count, std::size_t max_len = 0);

/// "McM_" + E|R|D, with an "A" suffix when attention is on.
std::string variant_name(EmbeddingMode mode, bool attention);
inline constexpr const char* kBaselineName = "Baseline";

/// elmo_like: character-trigram vectors; random: uniform init; domain:
/// skip-gram on the training texts.
EmbeddingTable make_embedding(EmbeddingMode mode, std::size_t dim, const PreparedData& data,
                              const SkipGramConfig& skipgram, Rng& rng);

ModelConfig resolve_model_config(const RunConfig& cfg, const PreparedData& data, ModelKind kind);

struct TrainedRun {
  std::string name;
  ModelConfig model;
  FitResult fit;
};

/// Builds the embedding and model from cfg.train.seed, then fits.
TrainedRun train_run(const RunConfig& cfg, const PreparedData& data, ModelKind kind = ModelKind::mcm);

struct MatrixRow {
  std::string model;
  std::string component;
  EvalReport report;
  std::string status = "ok";
};

struct MatrixResult {
  std::vector<MatrixRow> rows;
  std::vector<std::pair<std::string, std::string>> curves;  // variant name, curve CSV
};

/// Baseline then McM_E, McM_EA, McM_R, McM_RA, McM_D, McM_DA under one seed.
/// A failing cell is recorded in the status column and the rest still run.
MatrixResult run_experiment_matrix(const PreparedData& data, const RunConfig& base);

std::string results_csv(const MatrixResult& m);
/// results.csv plus curve_<variant>.csv for every McM variant.
void write_matrix(const MatrixResult& m, const std::filesystem::path& dir);

/// Candidate values swept on McM_R.
struct GridSpec {
  std::vector<std::size_t> kernel1{1, 2, 3, 4, 5};
  std::vector<std::size_t> kernel2{1, 2, 3, 4, 5};
  std::vector<double> dropout{0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<OptimizerKind> optimizer{OptimizerKind::adam, OptimizerKind::adadelta, OptimizerKind::sgd};
  std::vector<double> learning_rate{0.001, 0.002, 0.003, 0.004, 0.005};

  std::size_t size() const;
};

struct GridTrial {
  RunConfig config;
  double validation_f1 = 0.0;
  std::string status = "ok";
};

struct GridResult {
  std::vector<GridTrial> trials;
  std::size_t best = 0;  // index into trials; ties keep the earlier trial
};

/// Scores every combination on a stratified validation carve-out of `train`.
/// The caller retrains the winner on the full training split.
GridResult grid_search(std::span<const LabeledText> train, const LabelSet& labels, const RunConfig& base,
                       const GridSpec& spec);

std::string grid_csv(const GridResult& g);

}  // namespace mcm
