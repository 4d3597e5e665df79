// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "mcm/experiment.hpp"

using namespace mcm;

TEST(Experiment, VariantNames) {
  EXPECT_EQ(variant_name(EmbeddingMode::elmo_like, false), "McM_E");
  EXPECT_EQ(variant_name(EmbeddingMode::random, true), "McM_RA");
  EXPECT_EQ(variant_name(EmbeddingMode::domain, true), "McM_DA");
}

TEST(Experiment, VocabularyComesFromTrainOnly) {
  const std::vector<LabeledText> train{{"acha kaam hai", 0}, {"acha kaam hai", 0}, {"bura kaam", 1}, {"bura kaam", 1}};
  const std::vector<LabeledText> test{{"zabardast kaam", 0}};
  auto d = prepare_data(train, test, LabelSet::table1(), 2, 4);
  EXPECT_FALSE(d.vocab.contains("zabardast"));
  EXPECT_EQ(d.test.sequences[0], (std::vector<std::size_t>{kUnkId, d.vocab.id_of("kaam"), 0, 0}));
  EXPECT_EQ(d.train_tokens.size(), 4u);
}

TEST(Experiment, MatrixHasTwentyFiveRowsInOrder) {
  const auto data = fixture::tiny_data(150);
  auto cfg = fixture::tiny_run(1);
  auto m = run_experiment_matrix(data, cfg);
  ASSERT_EQ(m.rows.size(), 25u);
  EXPECT_EQ(m.rows[0].model, "Baseline");
  const char* order[] = {"McM_E", "McM_EA", "McM_R", "McM_RA", "McM_D", "McM_DA"};
  const char* comps[] = {"cnn", "slstm", "lstm", "discriminator"};
  for (std::size_t v = 0; v < 6; ++v)
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& row = m.rows[1 + 4 * v + k];
      EXPECT_EQ(row.model, order[v]);
      EXPECT_EQ(row.component, comps[k]);
      EXPECT_EQ(row.status, "ok");
      EXPECT_GE(row.report.macro_f1, 0.0);
      EXPECT_LE(row.report.macro_f1, 1.0);
    }
  ASSERT_EQ(m.curves.size(), 6u);
  const auto csv = results_csv(m);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 26);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "model,component,accuracy,precision,recall,f1,status");

  const auto dir = std::filesystem::temp_directory_path() / "mcm_matrix_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_matrix(m, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "results.csv"));
  for (const char* v : order) EXPECT_TRUE(std::filesystem::exists(dir / (std::string("curve_") + v + ".csv"))) << v;
  std::filesystem::remove_all(dir);
}

TEST(Experiment, FailedCellDoesNotStopTheMatrix) {
  const auto data = fixture::tiny_data(150);
  auto cfg = fixture::tiny_run(1);
  cfg.widths.kernel1 = 40;  // longer than any padded row: every McM cell fails, the baseline still trains
  auto m = run_experiment_matrix(data, cfg);
  ASSERT_EQ(m.rows.size(), 25u);
  EXPECT_EQ(m.rows[0].status, "ok");
  for (std::size_t i = 1; i < 25; ++i) EXPECT_EQ(m.rows[i].status.rfind("failed", 0), 0u) << m.rows[i].status;
}

TEST(Experiment, GridSearchKeepsEarliestBest) {
  const auto profile = ClassProfile::table1();
  Rng rng(3);
  const auto corpus = gen_synthetic(profile, 200, 0.5, 0.1, rng);
  GridSpec spec;
  spec.kernel1 = {1};
  spec.kernel2 = {2};
  spec.dropout = {0.2, 0.2};
  spec.optimizer = {OptimizerKind::adam};
  spec.learning_rate = {0.01};
  EXPECT_EQ(spec.size(), 2u);
  auto cfg = fixture::tiny_run(1);
  auto g = grid_search(corpus, profile.labels(), cfg, spec);
  ASSERT_EQ(g.trials.size(), 2u);
  EXPECT_EQ(g.trials[0].validation_f1, g.trials[1].validation_f1);
  EXPECT_EQ(g.best, 0u);
  const auto csv = grid_csv(g);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}
