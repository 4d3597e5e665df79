// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mcm/rng.hpp"

namespace mcm {

/// Ordered class names; a label's index is its class id.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<std::string> names);

  /// The twelve complaint categories of the SMS feedback corpus.
  static LabelSet table1();

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t id) const { return names_.at(id); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<std::size_t> index_of(std::string_view name) const;

  friend bool operator==(const LabelSet& a, const LabelSet& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
};

struct LabeledText {
  std::string text;
  std::size_t label = 0;

  friend bool operator==(const LabeledText&, const LabeledText&) = default;
};

struct Rejection {
  enum class Kind { malformed, unknown_label, too_short };
  std::size_t line = 0;  // 1-based
  Kind kind = Kind::malformed;
  std::string reason;
  std::string label;  // offending label text for unknown_label
};

/// Column mapping for TSV input.
struct TsvLayout {
  std::size_t text_column = 0;
  std::size_t label_column = 1;
  bool header = false;
};

struct LoadResult {
  std::vector<LabeledText> records;
  std::vector<Rejection> rejections;
  std::size_t lines_read = 0;  // data lines, excluding a skipped header

  /// Distinct unknown label strings in first-seen order.
  std::vector<std::string> unknown_labels() const;
  /// "line N: reason" per rejection.
  std::string report() const;
};

/// Reads UTF-8 "text<TAB>label" lines. Unknown labels, malformed lines and
/// texts with fewer than two tokens are collected as rejections.
/// Throws IoError when the file cannot be opened.
LoadResult load_tsv(const std::filesystem::path& path, const LabelSet& labels, const TsvLayout& layout = {});
LoadResult parse_tsv(std::istream& in, const LabelSet& labels, const TsvLayout& layout = {});

void write_tsv(std::ostream& out, std::span<const LabeledText> records, const LabelSet& labels);

/// Lowercases ASCII, splits on whitespace, strips leading/trailing ASCII
/// punctuation and drops empty tokens. No other normalisation.
std::vector<std::string> tokenize(std::string_view text);

/// Token <-> id map with pad = 0 and unk = 1 reserved.
class Vocabulary {
 public:
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kUnk = "<unk>";

  Vocabulary();
  /// Tokens seen at least `min_count` times, ordered by descending frequency
  /// then lexicographically, after the two specials.
  static Vocabulary build(std::span<const LabeledText> corpus, std::size_t min_count);
  /// Rebuilds from an id-ordered token list whose first two entries are the specials.
  static Vocabulary from_tokens(std::vector<std::string> tokens, std::size_t min_count);

  std::size_t size() const { return tokens_.size(); }
  std::size_t min_count() const { return min_count_; }
  /// Unknown tokens map to unk.
  std::size_t id_of(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_ && a.min_count_ == b.min_count_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> ids_;
  std::size_t min_count_ = 1;
};

/// Fixed-length rows: first max_len ids, right-padded with pad.
struct EncodedCorpus {
  std::vector<std::vector<std::size_t>> sequences;
  std::vector<std::size_t> labels;
  std::size_t max_len = 0;

  std::size_t size() const { return sequences.size(); }
};

std::vector<std::size_t> encode_text(std::string_view text, const Vocabulary& vocab, std::size_t max_len);
EncodedCorpus encode(std::span<const LabeledText> corpus, const Vocabulary& vocab, std::size_t max_len);

/// 95th percentile of token counts, clamped to [2, 64].
std::size_t default_max_len(std::span<const LabeledText> corpus);

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class: shuffle, then the first round(fraction * n_c) go to train.
/// Index lists come back in ascending order. Throws ContractError when a
/// class present in `labels` has fewer than two records.
SplitIndices stratified_split_indices(std::span<const std::size_t> labels, double train_fraction, Rng& rng);

struct Split {
  std::vector<LabeledText> train;
  std::vector<LabeledText> test;
};
Split stratified_split(std::span<const LabeledText> corpus, double train_fraction, Rng& rng);

/// Class names with target proportions.
struct ClassProfile {
  std::vector<std::string> names;
  std::vector<double> proportions;

  /// Class skew of the SMS feedback corpus.
  static ClassProfile table1();
  std::size_t size() const { return names.size(); }
  LabelSet labels() const { return LabelSet(names); }
  /// Throws ContractError unless proportions lie in (0, 1] and sum to 1 within
  /// 0.005. Counts are allocated from the renormalised proportions.
  void validate() const;
};

/// Keyword pools used by the synthetic generator. Each class owns disjoint
/// English-like and Roman-Urdu-like keywords; fillers are shared.
struct SyntheticLexicon {
  std::vector<std::vector<std::string>> english;  // per class
  std::vector<std::vector<std::string>> urdu;     // per class
  std::vector<std::string> english_fillers;
  std::vector<std::string> urdu_fillers;

  /// Deterministic pools for `classes` classes, independent of any run seed.
  static SyntheticLexicon make(std::size_t classes, std::size_t per_language = 8);
};

struct SyntheticOptions {
  double mix_rate = 0.5;     // per-token probability of switching language
  double noise_rate = 0.1;   // per-token probability of a spelling perturbation
  double filler_rate = 0.3;  // per-token probability of a shared filler word
  std::size_t min_tokens = 3;
  std::size_t max_tokens = 12;
};

/// Bilingual code-switched corpus. Class counts follow the profile exactly
/// (largest remainder, at least two per class) in shuffled order; each
/// record carries at least one class keyword.
std::vector<LabeledText> gen_synthetic(const ClassProfile& profile, std::size_t n, double mix_rate,
                                       double noise_rate, Rng& rng);
std::vector<LabeledText> gen_synthetic(const ClassProfile& profile, std::size_t n, const SyntheticOptions& opts,
                                       Rng& rng);

/// Class counts used by gen_synthetic for n records.
std::vector<std::size_t> allocate_counts(const ClassProfile& profile, std::size_t n);

}  // namespace mcm
