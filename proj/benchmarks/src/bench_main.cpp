// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "mcm/data.hpp"
#include "mcm/experiment.hpp"
#include "mcm/ops.hpp"
#include "mcm/optimizer.hpp"

using namespace mcm;

namespace {

Tensor random(Shape s, Rng& rng) {
  Tensor t(std::move(s));
  for (auto& v : t.data()) v = rng.uniform(-1, 1);
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Tensor a = random(Shape{n, n}, rng), b = random(Shape{n, n}, rng);
  for (auto _ : state) {
    Tape tape(false);
    benchmark::DoNotOptimize(matmul(tape.constant(a), tape.constant(b)).value().data().data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(300);

// Batch 128, 12 tokens, d = 300, 128 filters: the first conv layer of a training step.
void BM_Conv1dForwardBackward(benchmark::State& state) {
  const auto k = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  Tensor x = random(Shape{128, 12, 300}, rng);
  auto p = Conv1dParams::init(k, 300, 128, rng);
  p.weights.set_grad_enabled(true);
  p.bias.set_grad_enabled(true);
  for (auto _ : state) {
    Tape tape;
    tape.backward(sum_all(conv1d(tape.constant(x), p)));
  }
}
BENCHMARK(BM_Conv1dForwardBackward)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_LstmSequenceForwardBackward(benchmark::State& state) {
  const auto len = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  Tensor x = random(Shape{128, len, 300}, rng);
  auto p = LstmParams::init(300, 128, rng);
  p.input_weights.set_grad_enabled(true);
  p.recurrent_weights.set_grad_enabled(true);
  p.bias.set_grad_enabled(true);
  for (auto _ : state) {
    Tape tape;
    tape.backward(sum_all(lstm_sequence(tape.constant(x), p)));
  }
}
BENCHMARK(BM_LstmSequenceForwardBackward)->Arg(6)->Arg(12)->Unit(benchmark::kMillisecond);

// One optimizer step of the full three-learner model on a batch of 128.
void BM_TrainStep(benchmark::State& state) {
  const bool attention = state.range(0) != 0;
  const auto profile = ClassProfile::table1();
  Rng rng(4);
  const auto corpus = gen_synthetic(profile, 1000, 0.5, 0.1, rng);
  const auto data = prepare_data(corpus, corpus, profile.labels(), 2);
  RunConfig cfg;
  cfg.train.attention = attention;
  const auto mc = resolve_model_config(cfg, data, ModelKind::mcm);
  auto model = build_classifier(mc, init_random(mc.vocab_size, mc.embedding_dim, rng), rng);
  std::vector<Tensor*> params;
  for (auto& p : model->parameters())
    if (p.trainable) params.push_back(p.tensor);
  Optimizer opt(OptimizerKind::adam, 0.002);
  const std::span<const std::vector<std::size_t>> batch(data.train.sequences.data(), 128);
  const std::span<const std::size_t> targets(data.train.labels.data(), 128);
  Rng drop(5);
  for (auto _ : state) {
    for (Tensor* p : params) p->zero_grad();
    Tape tape;
    tape.backward(total_loss(model->logits(tape, batch, Mode::train, drop), targets));
    opt.step(params);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * 128));
}
BENCHMARK(BM_TrainStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Metrics(benchmark::State& state) {
  std::vector<std::size_t> truth(10000), pred(10000);
  Rng rng(6);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    truth[i] = rng.below(12);
    pred[i] = rng.below(12);
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(truth, pred, 12).macro_f1);
}
BENCHMARK(BM_Metrics);

void BM_Tokenize(benchmark::State& state) {
  const std::string text = "Shukria bohat acha kaam kiya, doctor sahab ne waqt par dawai di! very good service";
  for (auto _ : state) benchmark::DoNotOptimize(tokenize(text).size());
}
BENCHMARK(BM_Tokenize);

}  // namespace

BENCHMARK_MAIN();
