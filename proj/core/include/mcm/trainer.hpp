// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mcm/data.hpp"
#include "mcm/metrics.hpp"
#include "mcm/model.hpp"
#include "mcm/optimizer.hpp"

namespace mcm {

enum class SelectOn { test, validation };

const char* to_string(SelectOn s);
SelectOn parse_select_on(const std::string& s);

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double learning_rate = 0.002;
  OptimizerKind optimizer = OptimizerKind::adam;
  double dropout = 0.2;
  std::uint64_t seed = 1;
  bool attention = false;
  EmbeddingMode embedding_mode = EmbeddingMode::random;
  /// Which split picks the best epoch. Validation carves 20% of train, stratified.
  SelectOn select_on = SelectOn::test;
  double validation_fraction = 0.2;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::vector<double> error;     // 1 - accuracy per component, on test
  std::vector<double> macro_f1;  // per component, on test
  double selection_f1 = 0.0;     // final-component macro F1 on the selection split
};

struct FitResult {
  std::unique_ptr<Classifier> best;  // snapshot taken after the best epoch
  std::size_t best_epoch = 0;
  std::vector<std::string> components;
  std::vector<EvalReport> best_reports;  // test reports of the best epoch, per component
  std::vector<EpochRecord> curve;
};

/// Final-component predictions plus reports for every component, infer mode.
std::vector<EvalReport> evaluate_components(Classifier& model, const EncodedCorpus& data, std::size_t classes,
                                            std::size_t batch_size = 256);

/// Mini-batch training. Shuffling and dropout draw from streams forked off
/// cfg.seed. A final batch of one record joins the previous batch so batch
/// normalisation always sees two rows. Throws DivergenceError on a
/// non-finite batch loss.
FitResult fit(Classifier& model, const EncodedCorpus& train, const EncodedCorpus& test, const TrainConfig& cfg,
              std::size_t classes);

/// Curve CSV: epoch then one test-error column per component.
std::string curve_csv(const FitResult& r);

}  // namespace mcm
