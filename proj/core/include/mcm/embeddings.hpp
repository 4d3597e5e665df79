// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mcm/ops.hpp"
#include "mcm/rng.hpp"
#include "mcm/tensor.hpp"

namespace mcm {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;

/// vocab x d matrix of word vectors. Row kPadId is all-zero and never updated.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(Tensor vectors, bool trainable = true);

  std::size_t vocab_size() const { return vectors_.shape()[0]; }
  std::size_t dim() const { return vectors_.shape()[1]; }
  bool trainable() const { return vectors_.grad_enabled(); }
  void set_trainable(bool on) { vectors_.set_grad_enabled(on); }

  Tensor& vectors() { return vectors_; }
  const Tensor& vectors() const { return vectors_; }
  std::span<const double> row(std::size_t id) const;

 private:
  Tensor vectors_;
};

/// Rows other than pad drawn from uniform(-0.05, 0.05).
EmbeddingTable init_random(std::size_t vocab_size, std::size_t dim, Rng& rng);

/// Skip-gram with negative sampling.
struct SkipGramConfig {
  std::size_t dim = 300;
  std::size_t window = 5;
  std::size_t negative_samples = 5;
  std::size_t epochs = 5;
  /// Starting rate, decayed linearly towards zero over all epochs.
  double learning_rate = 0.025;
};

/// Trains input vectors on token-id sequences. Starts from
/// `init_random(vocab_size, cfg.dim, rng)` and keeps drawing from `rng`.
/// Pad tokens are skipped; negatives follow unigram counts raised to 0.75.
EmbeddingTable train_skipgram(std::span<const std::vector<std::size_t>> corpus, std::size_t vocab_size,
                              const SkipGramConfig& cfg, Rng& rng);

/// Character-trigram hashing embedder. The word is padded as "<word>", each
/// trigram hashed to a signed bucket in [0, dim), contributions summed and
/// scaled by 1/sqrt(#trigrams). Pure function of (word, dim).
std::vector<double> char_compose(std::string_view word, std::size_t dim);

/// Table whose row i is char_compose(tokens[i]); the pad row stays zero.
EmbeddingTable char_compose_table(std::span<const std::string> tokens, std::size_t dim);

/// Row gather onto a tape: ids.size() x d. Gradient scatters to the looked-up
/// rows only, never to the pad row.
Var lookup(Tape& tape, EmbeddingTable& table, std::span<const std::size_t> ids);

/// "word v1 v2 ... vd", one row per line, skipping the pad row.
void write_text(std::ostream& os, const EmbeddingTable& table, std::span<const std::string> tokens);

double cosine(std::span<const double> a, std::span<const double> b);

}  // namespace mcm
