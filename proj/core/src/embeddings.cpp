// SPDX-License-Identifier: Apache-2.0
#include "mcm/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "mcm/errors.hpp"

namespace mcm {

EmbeddingTable::EmbeddingTable(Tensor vectors, bool trainable) : vectors_(std::move(vectors)) {
  if (vectors_.rank() != 2) throw ShapeError("embedding table must be vocab x dim");
  vectors_.set_grad_enabled(trainable);
}

std::span<const double> EmbeddingTable::row(std::size_t id) const {
  if (id >= vocab_size()) throw ContractError("embedding row " + std::to_string(id) + " out of range");
  return vectors_.data().subspan(id * dim(), dim());
}

EmbeddingTable init_random(std::size_t vocab_size, std::size_t dim, Rng& rng) {
  if (vocab_size < 2) throw ContractError("init_random: vocabulary needs at least pad and unk");
  if (dim == 0) throw ContractError("init_random: dim must be positive");
  Tensor t(Shape{vocab_size, dim});
  auto d = t.data();
  for (std::size_t i = dim; i < d.size(); ++i) d[i] = rng.uniform(-0.05, 0.05);
  return EmbeddingTable(std::move(t), true);
}

namespace {

double logistic(double x) {
  if (x > 30) return 1.0;
  if (x < -30) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

}  // namespace

EmbeddingTable train_skipgram(std::span<const std::vector<std::size_t>> corpus, std::size_t vocab_size,
                              const SkipGramConfig& cfg, Rng& rng) {
  if (cfg.dim == 0 || cfg.window == 0) throw ContractError("skip-gram: dim and window must be positive");
  std::vector<double> counts(vocab_size, 0.0);
  std::size_t total = 0;
  for (const auto& sentence : corpus) {
    for (auto id : sentence) {
      if (id >= vocab_size) throw ContractError("skip-gram: token id out of range");
      if (id == kPadId) continue;
      counts[id] += 1.0;
      ++total;
    }
  }
  if (total == 0) throw ContractError("skip-gram: empty corpus");

  EmbeddingTable table = init_random(vocab_size, cfg.dim, rng);
  if (cfg.epochs == 0) return table;

  std::vector<double> cumulative(vocab_size, 0.0);
  double acc = 0.0;
  for (std::size_t i = 0; i < vocab_size; ++i) {
    acc += counts[i] > 0 ? std::pow(counts[i], 0.75) : 0.0;
    cumulative[i] = acc;
  }
  auto sample_negative = [&] {
    const double r = rng.uniform() * acc;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    return static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cumulative.begin(),
                                                            static_cast<std::ptrdiff_t>(vocab_size) - 1));
  };

  const std::size_t d = cfg.dim;
  auto in = table.vectors().data();
  std::vector<double> out(vocab_size * d, 0.0);
  std::vector<double> err(d);
  const double budget = static_cast<double>(cfg.epochs * total);
  std::size_t processed = 0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (const auto& sentence : corpus) {
      for (std::size_t pos = 0; pos < sentence.size(); ++pos) {
        const std::size_t center = sentence[pos];
        if (center == kPadId) continue;
        const double lr = cfg.learning_rate * std::max(1.0 - static_cast<double>(processed) / budget, 1e-4);
        ++processed;
        const std::size_t lo = pos >= cfg.window ? pos - cfg.window : 0;
        const std::size_t hi = std::min(sentence.size(), pos + cfg.window + 1);
        double* vin = in.data() + center * d;
        for (std::size_t cpos = lo; cpos < hi; ++cpos) {
          const std::size_t context = sentence[cpos];
          if (cpos == pos || context == kPadId) continue;
          std::fill(err.begin(), err.end(), 0.0);
          for (std::size_t s = 0; s <= cfg.negative_samples; ++s) {
            std::size_t target = context;
            double label = 1.0;
            if (s > 0) {
              target = sample_negative();
              if (target == context || target == kPadId) continue;
              label = 0.0;
            }
            double* vout = out.data() + target * d;
            double dot = 0.0;
            for (std::size_t k = 0; k < d; ++k) dot += vin[k] * vout[k];
            const double g = (label - logistic(dot)) * lr;
            for (std::size_t k = 0; k < d; ++k) {
              err[k] += g * vout[k];
              vout[k] += g * vin[k];
            }
          }
          for (std::size_t k = 0; k < d; ++k) vin[k] += err[k];
        }
      }
    }
  }
  return table;
}

std::vector<double> char_compose(std::string_view word, std::size_t dim) {
  if (word.empty()) throw ContractError("char_compose: empty word");
  if (dim == 0) throw ContractError("char_compose: dim must be positive");
  std::string padded;
  padded.reserve(word.size() + 2);
  padded += '<';
  padded += word;
  padded += '>';
  std::vector<double> v(dim, 0.0);
  const std::size_t grams = padded.size() - 2;
  for (std::size_t i = 0; i < grams; ++i) {
    const std::uint64_t h = splitmix64(fnv1a(std::string_view(padded).substr(i, 3)));
    const double sign = (h >> 63) ? -1.0 : 1.0;
    v[h % dim] += sign;
  }
  const double s = 1.0 / std::sqrt(static_cast<double>(grams));
  for (auto& x : v) x *= s;
  return v;
}

EmbeddingTable char_compose_table(std::span<const std::string> tokens, std::size_t dim) {
  if (tokens.size() < 2) throw ContractError("char_compose_table: vocabulary needs at least pad and unk");
  Tensor t(Shape{tokens.size(), dim});
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i == kPadId) continue;
    const auto v = char_compose(tokens[i], dim);
    std::copy(v.begin(), v.end(), t.data().begin() + i * dim);
  }
  return EmbeddingTable(std::move(t), true);
}

Var lookup(Tape& tape, EmbeddingTable& table, std::span<const std::size_t> ids) {
  return gather_rows(tape.leaf(table.vectors()), ids, kPadId);
}

void write_text(std::ostream& os, const EmbeddingTable& table, std::span<const std::string> tokens) {
  if (tokens.size() != table.vocab_size()) throw ContractError("write_text: token list does not match table");
  char buf[32];
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i == kPadId) continue;
    os << tokens[i];
    for (double x : table.row(i)) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      os << buf;
    }
    os << '\n';
  }
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("cosine: length mismatch");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / std::sqrt(na * nb);
}

}  // namespace mcm
