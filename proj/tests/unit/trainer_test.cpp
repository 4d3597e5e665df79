// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "mcm/errors.hpp"
#include "mcm/experiment.hpp"
#include "mcm/trainer.hpp"

using namespace mcm;

namespace {

std::vector<std::vector<double>> snapshot(Classifier& m) {
  std::vector<std::vector<double>> out;
  for (auto& p : m.parameters()) out.emplace_back(p.tensor->data().begin(), p.tensor->data().end());
  return out;
}

const PreparedData& data() {
  static const PreparedData d = fixture::tiny_data();
  return d;
}

}  // namespace

TEST(Fit, DeterministicAcrossRuns) {
  const auto cfg = fixture::tiny_run(2);
  auto a = train_run(cfg, data());
  auto b = train_run(cfg, data());
  ASSERT_EQ(a.fit.curve.size(), b.fit.curve.size());
  for (std::size_t e = 0; e < a.fit.curve.size(); ++e) {
    EXPECT_EQ(a.fit.curve[e].train_loss, b.fit.curve[e].train_loss);
    EXPECT_EQ(a.fit.curve[e].error, b.fit.curve[e].error);
    EXPECT_EQ(a.fit.curve[e].macro_f1, b.fit.curve[e].macro_f1);
  }
  EXPECT_EQ(snapshot(*a.fit.best), snapshot(*b.fit.best));
  EXPECT_EQ(curve_csv(a.fit), curve_csv(b.fit));
}

TEST(Fit, OneRecordPerEpochAndLossFalls) {
  auto cfg = fixture::tiny_run(5);
  auto r = train_run(cfg, data());
  ASSERT_EQ(r.fit.curve.size(), 5u);
  for (std::size_t e = 0; e < 5; ++e) {
    EXPECT_EQ(r.fit.curve[e].epoch, e + 1);
    ASSERT_EQ(r.fit.curve[e].error.size(), 4u);
    for (double err : r.fit.curve[e].error) {
      EXPECT_GE(err, 0.0);
      EXPECT_LE(err, 1.0);
    }
  }
  EXPECT_LT(r.fit.curve.back().train_loss, r.fit.curve.front().train_loss);
}

TEST(Fit, BestCheckpointRule) {
  auto r = train_run(fixture::tiny_run(4), data());
  const auto& curve = r.fit.curve;
  std::size_t best = 0;
  for (std::size_t e = 1; e < curve.size(); ++e)
    if (curve[e].selection_f1 > curve[best].selection_f1) best = e;
  EXPECT_EQ(r.fit.best_epoch, best + 1);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(r.fit.best_reports[k].macro_f1, curve[best].macro_f1[k]);
    EXPECT_EQ(1.0 - r.fit.best_reports[k].accuracy, curve[best].error[k]);
  }
  const auto again = evaluate_components(*r.fit.best, data().test, 12);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(again[k].macro_f1, r.fit.best_reports[k].macro_f1);
}

TEST(Evaluate, PureAndBatchSizeInvariant) {
  auto r = train_run(fixture::tiny_run(1), data());
  const auto before = snapshot(*r.fit.best);
  const auto a = evaluate_components(*r.fit.best, data().test, 12, 256);
  const auto b = evaluate_components(*r.fit.best, data().test, 12, 5);
  EXPECT_EQ(snapshot(*r.fit.best), before);
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(a[k].confusion, b[k].confusion);
    EXPECT_EQ(a[k].macro_f1, b[k].macro_f1);
  }
}

TEST(Fit, ValidationSelection) {
  auto cfg = fixture::tiny_run(2);
  cfg.train.select_on = SelectOn::validation;
  auto r = train_run(cfg, data());
  EXPECT_EQ(r.fit.curve.size(), 2u);
  EXPECT_GE(r.fit.best_epoch, 1u);
}

TEST(Fit, DivergenceNamesEpochAndBatch) {
  auto cfg = fixture::tiny_run(1);
  auto model_cfg = resolve_model_config(cfg, data(), ModelKind::mcm);
  Rng rng(1);
  auto emb = init_random(model_cfg.vocab_size, model_cfg.embedding_dim, rng);
  for (std::size_t id = 1; id < model_cfg.vocab_size; ++id) emb.vectors()[id * model_cfg.embedding_dim] = std::numeric_limits<double>::quiet_NaN();
  auto m = McmModel::build(model_cfg, std::move(emb), rng);
  try {
    fit(m, data().train, data().test, cfg.train, 12);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.epoch(), 1);
    EXPECT_EQ(e.batch(), 1);
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos);
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.dropout = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(parse_select_on("validation"), SelectOn::validation);
  EXPECT_THROW(parse_select_on("train"), ConfigError);
}

TEST(Curve, CsvLayout) {
  auto r = train_run(fixture::tiny_run(2), data());
  const auto csv = curve_csv(r.fit);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "epoch,cnn,slstm,lstm,discriminator");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
  auto base = train_run(fixture::tiny_run(1), data(), ModelKind::baseline);
  const auto bcsv = curve_csv(base.fit);
  EXPECT_EQ(bcsv.substr(0, bcsv.find('\n')), "epoch,error");
}
