// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mcm/embeddings.hpp"
#include "mcm/layers.hpp"

namespace mcm {

enum class EmbeddingMode { elmo_like, random, domain };

const char* to_string(EmbeddingMode m);
EmbeddingMode parse_embedding_mode(const std::string& s);
/// Default vector width per strategy: 1024 for elmo_like, 300 otherwise.
std::size_t default_embedding_dim(EmbeddingMode m);

enum class ModelKind { mcm, baseline };

/// Architecture hyperparameters. Widths the original work leaves open default
/// to 128 filters / 128 LSTM units / 128 and 64 dense units.
struct ModelConfig {
  ModelKind kind = ModelKind::mcm;
  std::size_t vocab_size = 2;
  std::size_t embedding_dim = 300;
  std::size_t classes = 12;
  std::size_t max_len = 16;
  std::size_t kernel1 = 1;
  std::size_t kernel2 = 2;
  std::size_t filters = 128;
  std::size_t lstm_hidden = 128;
  std::size_t dense1 = 128;
  std::size_t dense2 = 64;
  std::size_t baseline_kernel = 3;
  double dropout = 0.2;
  bool attention = false;
  /// Stops discriminator gradients at the learner feature boundary.
  bool detach_features = false;
  EmbeddingMode embedding_mode = EmbeddingMode::random;

  /// Throws ConfigError on any inconsistency.
  void validate() const;
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// A parameter or persistent statistic owned by a model.
struct NamedParam {
  std::string name;
  Tensor* tensor;
  bool trainable;
};

/// dense -> batchnorm -> relu -> dropout, twice, then a linear layer to C classes.
struct LearnerHead {
  DenseParams dense1;
  BatchNormParams bn1;
  DenseParams dense2;
  BatchNormParams bn2;
  DenseParams output;
  double dropout = 0.2;

  static LearnerHead init(std::size_t in, std::size_t hidden1, std::size_t hidden2, std::size_t classes,
                          double dropout, Rng& rng);

  struct Result {
    Var features;  // B x hidden2, the second block's output
    Var logits;    // B x C
  };
  Result forward(Var x, Mode mode, Rng& rng);
  void collect(const std::string& prefix, std::vector<NamedParam>& out);
};

/// One batch of fixed-length token-id rows.
using IdBatch = std::span<const std::vector<std::size_t>>;

/// Common surface the trainer, evaluator and checkpointing work against.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual const ModelConfig& config() const = 0;
  /// Component names in report order; the last one is the final prediction.
  virtual std::vector<std::string> components() const = 0;
  /// Logits (B x C) per component.
  virtual std::vector<Var> logits(Tape& tape, IdBatch batch, Mode mode, Rng& rng) = 0;
  virtual std::vector<NamedParam> parameters() = 0;
  virtual std::unique_ptr<Classifier> clone() const = 0;

  std::size_t parameter_count(bool trainable_only = true);
};

struct McmOutput {
  Tensor probs_cnn, probs_slstm, probs_lstm, probs_disc;  // B x C each
  Var logits_cnn, logits_slstm, logits_lstm, logits_disc;
  Var features_cnn, features_slstm, features_lstm;  // forwarded to the discriminator
  // Intermediate activations, exposed for inspection.
  Var embedded;      // B x L x d
  Var cnn_first;     // first conv layer output, before attention
  Var cnn_second;    // second conv layer output
  Var slstm_first;   // first stacked LSTM layer output, before attention
  Var slstm_second;  // second stacked LSTM layer output
};

/// Three locally supervised learners (stacked CNN, stacked LSTM, LSTM
/// encoder) feeding a discriminator.
class McmModel final : public Classifier {
 public:
  /// Validates `cfg` and initialises every layer from `rng`.
  static McmModel build(const ModelConfig& cfg, EmbeddingTable embedding, Rng& rng);

  McmOutput forward(Tape& tape, IdBatch batch, Mode mode, Rng& rng);

  const ModelConfig& config() const override { return config_; }
  std::vector<std::string> components() const override;
  std::vector<Var> logits(Tape& tape, IdBatch batch, Mode mode, Rng& rng) override;
  std::vector<NamedParam> parameters() override;
  std::unique_ptr<Classifier> clone() const override { return std::make_unique<McmModel>(*this); }

  EmbeddingTable embedding;
  Conv1dParams cnn1, cnn2;
  LstmParams lstm_s1, lstm_s2, lstm_enc;
  std::optional<AttentionParams> attention_cnn, attention_lstm;
  LearnerHead head_cnn, head_slstm, head_lstm, discriminator;

 private:
  ModelConfig config_;
};

/// Single convolution layer (kernel 3), global max-pool, one hidden dense layer.
class BaselineModel final : public Classifier {
 public:
  static BaselineModel build(const ModelConfig& cfg, EmbeddingTable embedding, Rng& rng);

  const ModelConfig& config() const override { return config_; }
  std::vector<std::string> components() const override { return {"-"}; }
  std::vector<Var> logits(Tape& tape, IdBatch batch, Mode mode, Rng& rng) override;
  std::vector<NamedParam> parameters() override;
  std::unique_ptr<Classifier> clone() const override { return std::make_unique<BaselineModel>(*this); }

  EmbeddingTable embedding;
  Conv1dParams conv;
  DenseParams hidden;
  DenseParams output;

 private:
  ModelConfig config_;
};

/// Builds either architecture from a config.
std::unique_ptr<Classifier> build_classifier(const ModelConfig& cfg, EmbeddingTable embedding, Rng& rng);

/// Sum of the four heads' cross-entropies, averaged over the batch.
Var mcm_loss(const McmOutput& out, std::span<const std::size_t> targets);
/// Same over an arbitrary list of component logits.
Var total_loss(std::span<const Var> logits, std::span<const std::size_t> targets);

/// Index of the largest value; ties go to the lowest index.
std::size_t argmax(std::span<const double> values);

struct Prediction {
  std::size_t label;
  std::vector<double> probs;
};

/// Final-component prediction for each row, inference mode.
std::vector<Prediction> predict(Classifier& model, IdBatch batch);
Prediction predict(Classifier& model, std::span<const std::size_t> ids);

/// Softmax probabilities (B x C) per component, inference mode.
std::vector<Tensor> component_probs(Classifier& model, IdBatch batch);

}  // namespace mcm
