// SPDX-License-Identifier: Apache-2.0
#include "mcm/model.hpp"

#include <algorithm>

#include "mcm/errors.hpp"

namespace mcm {

const char* to_string(EmbeddingMode m) {
  switch (m) {
    case EmbeddingMode::elmo_like: return "elmo_like";
    case EmbeddingMode::random: return "random";
    case EmbeddingMode::domain: return "domain";
  }
  return "?";
}

EmbeddingMode parse_embedding_mode(const std::string& s) {
  if (s == "elmo_like") return EmbeddingMode::elmo_like;
  if (s == "random") return EmbeddingMode::random;
  if (s == "domain") return EmbeddingMode::domain;
  throw ConfigError("unknown embedding mode '" + s + "' (expected elmo_like, random or domain)");
}

std::size_t default_embedding_dim(EmbeddingMode m) { return m == EmbeddingMode::elmo_like ? 1024 : 300; }

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  if (vocab_size < 2) throw ConfigError("vocab_size must be at least 2");
  if (classes < 2) throw ConfigError("classes must be at least 2");
  positive(embedding_dim, "embedding_dim");
  positive(max_len, "max_len");
  positive(filters, "filters");
  positive(dense1, "dense1");
  positive(dense2, "dense2");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (kind == ModelKind::baseline) {
    positive(baseline_kernel, "baseline_kernel");
    if (max_len < baseline_kernel) {
      throw ConfigError("max_len " + std::to_string(max_len) + " is shorter than the baseline kernel " +
                        std::to_string(baseline_kernel));
    }
    return;
  }
  positive(kernel1, "kernel1");
  positive(kernel2, "kernel2");
  positive(lstm_hidden, "lstm_hidden");
  if (max_len + 2 < kernel1 + kernel2 + 1) {
    throw ConfigError("max_len " + std::to_string(max_len) + " leaves no window for kernels " +
                      std::to_string(kernel1) + " and " + std::to_string(kernel2));
  }
}

LearnerHead LearnerHead::init(std::size_t in, std::size_t hidden1, std::size_t hidden2, std::size_t classes,
                              double dropout, Rng& rng) {
  LearnerHead h;
  h.dense1 = DenseParams::init(in, hidden1, Activation::none, rng);
  h.bn1 = BatchNormParams::init(hidden1);
  h.dense2 = DenseParams::init(hidden1, hidden2, Activation::none, rng);
  h.bn2 = BatchNormParams::init(hidden2);
  h.output = DenseParams::init(hidden2, classes, Activation::none, rng);
  h.dropout = dropout;
  return h;
}

LearnerHead::Result LearnerHead::forward(Var x, Mode mode, Rng& rng) {
  Var a = mcm::dropout(relu(batchnorm(mcm::dense(x, dense1), bn1, mode)), dropout, mode, rng);
  Var b = mcm::dropout(relu(batchnorm(mcm::dense(a, dense2), bn2, mode)), dropout, mode, rng);
  return {b, dense(b, output)};
}

void LearnerHead::collect(const std::string& prefix, std::vector<NamedParam>& out) {
  auto dense_params = [&](const std::string& n, DenseParams& d) {
    out.push_back({prefix + "." + n + ".weight", &d.weights, true});
    out.push_back({prefix + "." + n + ".bias", &d.bias, true});
  };
  auto bn_params = [&](const std::string& n, BatchNormParams& b) {
    out.push_back({prefix + "." + n + ".gamma", &b.gamma, true});
    out.push_back({prefix + "." + n + ".beta", &b.beta, true});
    out.push_back({prefix + "." + n + ".running_mean", &b.running_mean, false});
    out.push_back({prefix + "." + n + ".running_var", &b.running_var, false});
  };
  dense_params("dense1", dense1);
  bn_params("bn1", bn1);
  dense_params("dense2", dense2);
  bn_params("bn2", bn2);
  dense_params("output", output);
}

std::size_t Classifier::parameter_count(bool trainable_only) {
  std::size_t n = 0;
  for (const auto& p : parameters()) {
    if (!trainable_only || p.trainable) n += p.tensor->numel();
  }
  return n;
}

namespace {

void check_embedding(const ModelConfig& cfg, const EmbeddingTable& e) {
  if (e.vocab_size() != cfg.vocab_size || e.dim() != cfg.embedding_dim) {
    throw ConfigError("embedding table is " + e.vectors().shape().str() + " but config expects " +
                      std::to_string(cfg.vocab_size) + "x" + std::to_string(cfg.embedding_dim));
  }
}

// Flattens a batch into ids and embeds it as B x L x d.
Var embed(Tape& tape, EmbeddingTable& table, IdBatch batch, std::size_t max_len) {
  if (batch.empty()) throw ContractError("empty batch");
  std::vector<std::size_t> ids;
  ids.reserve(batch.size() * max_len);
  for (const auto& row : batch) {
    if (row.size() != max_len) {
      throw ContractError("token row of length " + std::to_string(row.size()) + " but model expects " +
                          std::to_string(max_len));
    }
    ids.insert(ids.end(), row.begin(), row.end());
  }
  return reshape(lookup(tape, table, ids), Shape{batch.size(), max_len, table.dim()});
}

Var max_avg_pool(Var seq) { return concat({reduce(Reduce::max, seq, 1), reduce(Reduce::mean, seq, 1)}, 1); }

void collect_lstm(const std::string& n, LstmParams& p, std::vector<NamedParam>& out) {
  out.push_back({n + ".W", &p.input_weights, true});
  out.push_back({n + ".U", &p.recurrent_weights, true});
  out.push_back({n + ".b", &p.bias, true});
}

void enable_grads(Classifier& m) {
  for (auto& p : m.parameters()) p.tensor->set_grad_enabled(p.trainable);
}

Tensor probs_of(Var logits) { return softmax(stop_gradient(logits)).value(); }

}  // namespace

McmModel McmModel::build(const ModelConfig& cfg, EmbeddingTable embedding, Rng& rng) {
  cfg.validate();
  if (cfg.kind != ModelKind::mcm) throw ConfigError("McmModel::build requires kind mcm");
  check_embedding(cfg, embedding);
  McmModel m;
  m.config_ = cfg;
  m.embedding = std::move(embedding);
  const std::size_t d = cfg.embedding_dim, f = cfg.filters, h = cfg.lstm_hidden;
  m.cnn1 = Conv1dParams::init(cfg.kernel1, d, f, rng);
  m.cnn2 = Conv1dParams::init(cfg.kernel2, f, f, rng);
  m.lstm_s1 = LstmParams::init(d, h, rng);
  m.lstm_s2 = LstmParams::init(h, h, rng);
  m.lstm_enc = LstmParams::init(d, h, rng);
  if (cfg.attention) {
    m.attention_cnn = AttentionParams::init(f, rng);
    m.attention_lstm = AttentionParams::init(h, rng);
  }
  m.head_cnn = LearnerHead::init(2 * f, cfg.dense1, cfg.dense2, cfg.classes, cfg.dropout, rng);
  m.head_slstm = LearnerHead::init(2 * h, cfg.dense1, cfg.dense2, cfg.classes, cfg.dropout, rng);
  m.head_lstm = LearnerHead::init(h, cfg.dense1, cfg.dense2, cfg.classes, cfg.dropout, rng);
  m.discriminator = LearnerHead::init(3 * cfg.dense2, cfg.dense1, cfg.dense2, cfg.classes, cfg.dropout, rng);
  enable_grads(m);
  return m;
}

std::vector<std::string> McmModel::components() const { return {"cnn", "slstm", "lstm", "discriminator"}; }

McmOutput McmModel::forward(Tape& tape, IdBatch batch, Mode mode, Rng& rng) {
  McmOutput out;
  const std::size_t len = config_.max_len;
  Var x = embed(tape, embedding, batch, len);
  out.embedded = x;

  // Stacked CNN learner.
  out.cnn_first = conv1d(x, cnn1);
  Var c = out.cnn_first;
  if (attention_cnn) c = soft_attention(c, *attention_cnn).output;
  out.cnn_second = conv1d(c, cnn2);
  auto cnn = head_cnn.forward(max_avg_pool(out.cnn_second), mode, rng);

  // Stacked LSTM learner.
  out.slstm_first = lstm_sequence(x, lstm_s1);
  Var s = out.slstm_first;
  if (attention_lstm) s = soft_attention(s, *attention_lstm).output;
  out.slstm_second = lstm_sequence(s, lstm_s2);
  auto slstm = head_slstm.forward(max_avg_pool(out.slstm_second), mode, rng);

  // LSTM encoder learner: final hidden state only.
  Var enc = select(lstm_sequence(x, lstm_enc), 1, len - 1);
  auto lstm = head_lstm.forward(enc, mode, rng);

  out.features_cnn = cnn.features;
  out.features_slstm = slstm.features;
  out.features_lstm = lstm.features;
  std::vector<Var> feats{cnn.features, slstm.features, lstm.features};
  if (config_.detach_features) {
    for (auto& f : feats) f = stop_gradient(f);
  }
  auto disc = discriminator.forward(concat(feats, 1), mode, rng);

  out.logits_cnn = cnn.logits;
  out.logits_slstm = slstm.logits;
  out.logits_lstm = lstm.logits;
  out.logits_disc = disc.logits;
  out.probs_cnn = probs_of(cnn.logits);
  out.probs_slstm = probs_of(slstm.logits);
  out.probs_lstm = probs_of(lstm.logits);
  out.probs_disc = probs_of(disc.logits);
  return out;
}

std::vector<Var> McmModel::logits(Tape& tape, IdBatch batch, Mode mode, Rng& rng) {
  auto out = forward(tape, batch, mode, rng);
  return {out.logits_cnn, out.logits_slstm, out.logits_lstm, out.logits_disc};
}

std::vector<NamedParam> McmModel::parameters() {
  std::vector<NamedParam> out;
  out.push_back({"embedding", &embedding.vectors(), embedding.trainable()});
  out.push_back({"cnn1.weight", &cnn1.weights, true});
  out.push_back({"cnn1.bias", &cnn1.bias, true});
  out.push_back({"cnn2.weight", &cnn2.weights, true});
  out.push_back({"cnn2.bias", &cnn2.bias, true});
  if (attention_cnn) {
    out.push_back({"attention_cnn.weight", &attention_cnn->weights, true});
    out.push_back({"attention_cnn.bias", &attention_cnn->bias, true});
  }
  collect_lstm("lstm_s1", lstm_s1, out);
  collect_lstm("lstm_s2", lstm_s2, out);
  if (attention_lstm) {
    out.push_back({"attention_lstm.weight", &attention_lstm->weights, true});
    out.push_back({"attention_lstm.bias", &attention_lstm->bias, true});
  }
  collect_lstm("lstm_enc", lstm_enc, out);
  head_cnn.collect("head_cnn", out);
  head_slstm.collect("head_slstm", out);
  head_lstm.collect("head_lstm", out);
  discriminator.collect("discriminator", out);
  return out;
}

BaselineModel BaselineModel::build(const ModelConfig& cfg, EmbeddingTable embedding, Rng& rng) {
  cfg.validate();
  if (cfg.kind != ModelKind::baseline) throw ConfigError("BaselineModel::build requires kind baseline");
  check_embedding(cfg, embedding);
  BaselineModel m;
  m.config_ = cfg;
  m.embedding = std::move(embedding);
  m.conv = Conv1dParams::init(cfg.baseline_kernel, cfg.embedding_dim, cfg.filters, rng);
  m.hidden = DenseParams::init(cfg.filters, cfg.dense1, Activation::relu, rng);
  m.output = DenseParams::init(cfg.dense1, cfg.classes, Activation::none, rng);
  enable_grads(m);
  return m;
}

std::vector<Var> BaselineModel::logits(Tape& tape, IdBatch batch, Mode mode, Rng& rng) {
  Var x = embed(tape, embedding, batch, config_.max_len);
  Var pooled = reduce(Reduce::max, conv1d(x, conv), 1);
  Var h = dropout(dense(pooled, hidden), config_.dropout, mode, rng);
  return {dense(h, output)};
}

std::vector<NamedParam> BaselineModel::parameters() {
  return {{"embedding", &embedding.vectors(), embedding.trainable()},
          {"conv.weight", &conv.weights, true},
          {"conv.bias", &conv.bias, true},
          {"hidden.weight", &hidden.weights, true},
          {"hidden.bias", &hidden.bias, true},
          {"output.weight", &output.weights, true},
          {"output.bias", &output.bias, true}};
}

std::unique_ptr<Classifier> build_classifier(const ModelConfig& cfg, EmbeddingTable embedding, Rng& rng) {
  if (cfg.kind == ModelKind::baseline) {
    return std::make_unique<BaselineModel>(BaselineModel::build(cfg, std::move(embedding), rng));
  }
  return std::make_unique<McmModel>(McmModel::build(cfg, std::move(embedding), rng));
}

Var total_loss(std::span<const Var> logits, std::span<const std::size_t> targets) {
  if (logits.empty()) throw ContractError("total_loss: no components");
  Var loss = softmax_ce(logits[0], targets).loss;
  for (std::size_t i = 1; i < logits.size(); ++i) loss = add(loss, softmax_ce(logits[i], targets).loss);
  return loss;
}

Var mcm_loss(const McmOutput& out, std::span<const std::size_t> targets) {
  const Var parts[] = {out.logits_cnn, out.logits_slstm, out.logits_lstm, out.logits_disc};
  return total_loss(parts, targets);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ContractError("argmax of an empty vector");
  return static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<Tensor> component_probs(Classifier& model, IdBatch batch) {
  Tape tape(false);
  Rng unused(0);
  std::vector<Tensor> out;
  for (Var l : model.logits(tape, batch, Mode::infer, unused)) out.push_back(softmax(l).value());
  return out;
}

std::vector<Prediction> predict(Classifier& model, IdBatch batch) {
  const auto probs = component_probs(model, batch);
  const Tensor& final = probs.back();
  const std::size_t classes = final.shape()[1];
  std::vector<Prediction> out;
  for (std::size_t r = 0; r < batch.size(); ++r) {
    auto row = final.data().subspan(r * classes, classes);
    out.push_back({argmax(row), std::vector<double>(row.begin(), row.end())});
  }
  return out;
}

Prediction predict(Classifier& model, std::span<const std::size_t> ids) {
  const std::vector<std::vector<std::size_t>> batch{std::vector<std::size_t>(ids.begin(), ids.end())};
  return predict(model, IdBatch(batch)).front();
}

}  // namespace mcm
