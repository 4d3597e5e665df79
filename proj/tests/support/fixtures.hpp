// SPDX-License-Identifier: Apache-2.0
// Small configurations shared by the model, trainer and checkpoint tests.
#pragma once

#include "mcm/data.hpp"
#include "mcm/experiment.hpp"
#include "mcm/model.hpp"

namespace fixture {

inline mcm::ModelConfig tiny_model(std::size_t vocab = 12, std::size_t classes = 4, std::size_t len = 5) {
  mcm::ModelConfig c;
  c.vocab_size = vocab;
  c.embedding_dim = 6;
  c.classes = classes;
  c.max_len = len;
  c.filters = 4;
  c.lstm_hidden = 3;
  c.dense1 = 5;
  c.dense2 = 3;
  return c;
}

inline mcm::RunConfig tiny_run(std::size_t epochs = 3) {
  mcm::RunConfig r;
  r.train.epochs = epochs;
  r.train.batch_size = 32;
  r.train.learning_rate = 0.01;
  r.widths = tiny_model();
  r.embedding_dim = 8;
  r.skipgram.epochs = 1;
  return r;
}

/// Small synthetic corpus split 80/20 and encoded.
inline mcm::PreparedData tiny_data(std::size_t n = 240, std::uint64_t seed = 1) {
  const auto profile = mcm::ClassProfile::table1();
  mcm::Rng rng(seed);
  auto corpus = mcm::gen_synthetic(profile, n, 0.5, 0.1, rng);
  auto split = mcm::stratified_split(corpus, 0.8, rng);
  return mcm::prepare_data(split.train, split.test, profile.labels(), 2);
}

inline std::vector<std::vector<std::size_t>> random_ids(mcm::Rng& rng, std::size_t rows, std::size_t len,
                                                       std::size_t vocab) {
  std::vector<std::vector<std::size_t>> out(rows, std::vector<std::size_t>(len));
  for (auto& r : out)
    for (auto& id : r) id = rng.below(vocab);
  return out;
}

}  // namespace fixture
