// SPDX-License-Identifier: Apache-2.0
#include "mcm/trainer.hpp"

#include <cmath>
#include <numeric>

#include "mcm/errors.hpp"

namespace mcm {

const char* to_string(SelectOn s) { return s == SelectOn::test ? "test" : "validation"; }

SelectOn parse_select_on(const std::string& s) {
  if (s == "test") return SelectOn::test;
  if (s == "validation") return SelectOn::validation;
  throw ConfigError("unknown selection split '" + s + "' (expected test or validation)");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw ConfigError("validation fraction must lie in (0, 1)");
  }
}

namespace {

EncodedCorpus subset(const EncodedCorpus& c, const std::vector<std::size_t>& idx) {
  EncodedCorpus out;
  out.max_len = c.max_len;
  for (auto i : idx) {
    out.sequences.push_back(c.sequences[i]);
    out.labels.push_back(c.labels[i]);
  }
  return out;
}

void check_corpus(const EncodedCorpus& c, const char* what, std::size_t classes, std::size_t max_len) {
  if (c.size() == 0) throw ContractError(std::string(what) + " split is empty");
  if (c.labels.size() != c.sequences.size()) throw ContractError(std::string(what) + " split labels misaligned");
  if (c.max_len != max_len) {
    throw ContractError(std::string(what) + " split is encoded at length " + std::to_string(c.max_len) +
                        " but the model expects " + std::to_string(max_len));
  }
  for (auto y : c.labels) {
    if (y >= classes) throw ContractError(std::string(what) + " split has label " + std::to_string(y));
  }
}

std::vector<std::pair<std::size_t, std::size_t>> batches(std::size_t n, std::size_t size) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t b = 0; b < n; b += size) out.emplace_back(b, std::min(n, b + size));
  if (out.size() > 1 && out.back().second - out.back().first == 1) {
    out.pop_back();
    out.back().second = n;
  }
  return out;
}

std::vector<Tensor*> trainable(Classifier& m) {
  std::vector<Tensor*> out;
  for (auto& p : m.parameters()) {
    if (p.trainable) out.push_back(p.tensor);
  }
  return out;
}

}  // namespace

std::vector<EvalReport> evaluate_components(Classifier& model, const EncodedCorpus& data, std::size_t classes,
                                            std::size_t batch_size) {
  if (data.size() == 0) throw ContractError("cannot evaluate an empty split");
  const std::size_t n_comp = model.components().size();
  std::vector<std::vector<std::size_t>> pred(n_comp);
  for (std::size_t b = 0; b < data.size(); b += batch_size) {
    const std::size_t e = std::min(data.size(), b + batch_size);
    IdBatch batch(data.sequences.data() + b, e - b);
    const auto probs = component_probs(model, batch);
    for (std::size_t c = 0; c < n_comp; ++c) {
      for (std::size_t r = 0; r < e - b; ++r) pred[c].push_back(argmax(probs[c].data().subspan(r * classes, classes)));
    }
  }
  std::vector<EvalReport> out;
  for (std::size_t c = 0; c < n_comp; ++c) out.push_back(evaluate(data.labels, pred[c], classes));
  return out;
}

FitResult fit(Classifier& model, const EncodedCorpus& train_in, const EncodedCorpus& test, const TrainConfig& cfg,
              std::size_t classes) {
  cfg.validate();
  const std::size_t len = model.config().max_len;
  check_corpus(train_in, "train", classes, len);
  check_corpus(test, "test", classes, len);

  Rng master(cfg.seed);
  Rng shuffle_rng = master.fork("shuffle");
  Rng dropout_rng = master.fork("dropout");

  EncodedCorpus train = train_in;
  EncodedCorpus validation;
  if (cfg.select_on == SelectOn::validation) {
    Rng split_rng = master.fork("validation");
    auto idx = stratified_split_indices(train_in.labels, 1.0 - cfg.validation_fraction, split_rng);
    train = subset(train_in, idx.train);
    validation = subset(train_in, idx.test);
  }
  if (train.size() < 2) throw ContractError("training needs at least two records");
  const EncodedCorpus& selection = cfg.select_on == SelectOn::validation ? validation : test;

  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  const auto params = trainable(model);
  FitResult result;
  result.components = model.components();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  double best_f1 = -1.0;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t batch_no = 0;
    for (auto [b, e] : batches(order.size(), cfg.batch_size)) {
      ++batch_no;
      std::vector<std::vector<std::size_t>> rows;
      std::vector<std::size_t> targets;
      for (std::size_t i = b; i < e; ++i) {
        rows.push_back(train.sequences[order[i]]);
        targets.push_back(train.labels[order[i]]);
      }
      for (Tensor* p : params) p->zero_grad();
      Tape tape;
      const auto logits = model.logits(tape, rows, Mode::train, dropout_rng);
      Var loss = total_loss(logits, targets);
      const double v = loss.value()[0];
      if (!std::isfinite(v)) {
        throw DivergenceError(static_cast<int>(epoch), static_cast<int>(batch_no), v);
      }
      loss_sum += v * static_cast<double>(e - b);
      tape.backward(loss);
      opt.step(params);
    }
    for (Tensor* p : params) p->zero_grad();

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train.size());
    auto reports = evaluate_components(model, test, classes);
    for (const auto& r : reports) {
      rec.error.push_back(1.0 - r.accuracy);
      rec.macro_f1.push_back(r.macro_f1);
    }
    rec.selection_f1 = cfg.select_on == SelectOn::validation
                           ? evaluate_components(model, selection, classes).back().macro_f1
                           : reports.back().macro_f1;
    if (rec.selection_f1 > best_f1) {
      best_f1 = rec.selection_f1;
      result.best = model.clone();
      result.best_epoch = epoch;
      result.best_reports = std::move(reports);
    }
    result.curve.push_back(std::move(rec));
  }
  return result;
}

std::string curve_csv(const FitResult& r) {
  std::string out = "epoch";
  for (const auto& c : r.components) out += "," + (c == "-" ? std::string("error") : c);
  out += "\n";
  for (const auto& rec : r.curve) {
    out += std::to_string(rec.epoch);
    for (double e : rec.error) out += "," + format_metric(e);
    out += "\n";
  }
  return out;
}

}  // namespace mcm
