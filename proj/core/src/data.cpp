// SPDX-License-Identifier: Apache-2.0
#include "mcm/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mcm/embeddings.hpp"
#include "mcm/errors.hpp"

namespace mcm {

LabelSet::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw ContractError("label names must be nonempty");
    if (!seen.insert(n).second) throw ContractError("duplicate label name '" + n + "'");
  }
}

LabelSet LabelSet::table1() { return ClassProfile::table1().labels(); }

std::optional<std::size_t> LabelSet::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::vector<std::string> LoadResult::unknown_labels() const {
  std::vector<std::string> out;
  for (const auto& r : rejections) {
    if (r.kind == Rejection::Kind::unknown_label && std::find(out.begin(), out.end(), r.label) == out.end()) {
      out.push_back(r.label);
    }
  }
  return out;
}

std::string LoadResult::report() const {
  std::string s;
  for (const auto& r : rejections) s += "line " + std::to_string(r.line) + ": " + r.reason + "\n";
  return s;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

LoadResult parse_tsv(std::istream& in, const LabelSet& labels, const TsvLayout& layout) {
  LoadResult result;
  std::string line;
  std::size_t lineno = 0;
  const std::size_t needed = std::max(layout.text_column, layout.label_column) + 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (layout.header && lineno == 1) continue;
    ++result.lines_read;
    std::string_view view(line);
    if (!view.empty() && view.back() == '\r') view.remove_suffix(1);
    const auto fields = split_tabs(view);
    if (fields.size() < needed) {
      result.rejections.push_back({lineno, Rejection::Kind::malformed,
                                   "malformed line: expected " + std::to_string(needed) + " tab-separated fields",
                                   {}});
      continue;
    }
    const std::string label(trim(fields[layout.label_column]));
    const auto id = labels.index_of(label);
    if (!id) {
      result.rejections.push_back({lineno, Rejection::Kind::unknown_label, "unknown label '" + label + "'", label});
      continue;
    }
    const std::string_view text = fields[layout.text_column];
    if (tokenize(text).size() < 2) {
      result.rejections.push_back({lineno, Rejection::Kind::too_short, "fewer than 2 tokens", {}});
      continue;
    }
    result.records.push_back({std::string(text), *id});
  }
  return result;
}

LoadResult load_tsv(const std::filesystem::path& path, const LabelSet& labels, const TsvLayout& layout) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return parse_tsv(in, labels, layout);
}

void write_tsv(std::ostream& out, std::span<const LabeledText> records, const LabelSet& labels) {
  for (const auto& r : records) out << r.text << '\t' << labels.name(r.label) << '\n';
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  const auto is_punct = [](unsigned char c) { return c < 128 && std::ispunct(c) != 0; };
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    std::size_t b = i, e = j;
    while (b < e && is_punct(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_punct(static_cast<unsigned char>(text[e - 1]))) --e;
    if (b < e) {
      std::string tok(text.substr(b, e - b));
      for (auto& c : tok) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 128) c = static_cast<char>(std::tolower(u));
      }
      tokens.push_back(std::move(tok));
    }
    i = j;
  }
  return tokens;
}

Vocabulary::Vocabulary() : tokens_{std::string(kPad), std::string(kUnk)} {
  ids_.emplace(tokens_[0], kPadId);
  ids_.emplace(tokens_[1], kUnkId);
}

Vocabulary Vocabulary::build(std::span<const LabeledText> corpus, std::size_t min_count) {
  if (corpus.empty()) throw ContractError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& r : corpus) {
    for (auto& t : tokenize(r.text)) ++freq[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : freq) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{std::string(kPad), std::string(kUnk)};
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return from_tokens(std::move(tokens), min_count);
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens, std::size_t min_count) {
  if (tokens.size() < 2 || tokens[0] != kPad || tokens[1] != kUnk) {
    throw ContractError("vocabulary must start with the pad and unk specials");
  }
  Vocabulary v;
  v.tokens_ = std::move(tokens);
  v.ids_.clear();
  v.min_count_ = min_count;
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.ids_.emplace(v.tokens_[i], i).second) {
      throw ContractError("duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  return v;
}

std::size_t Vocabulary::id_of(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

std::vector<std::size_t> encode_text(std::string_view text, const Vocabulary& vocab, std::size_t max_len) {
  if (max_len < 2) throw ContractError("encode: max length must be at least 2");
  std::vector<std::size_t> row(max_len, kPadId);
  const auto tokens = tokenize(text);
  for (std::size_t i = 0; i < std::min(max_len, tokens.size()); ++i) row[i] = vocab.id_of(tokens[i]);
  return row;
}

EncodedCorpus encode(std::span<const LabeledText> corpus, const Vocabulary& vocab, std::size_t max_len) {
  EncodedCorpus out;
  out.max_len = max_len;
  out.sequences.reserve(corpus.size());
  out.labels.reserve(corpus.size());
  for (const auto& r : corpus) {
    out.sequences.push_back(encode_text(r.text, vocab, max_len));
    out.labels.push_back(r.label);
  }
  if (max_len < 2) throw ContractError("encode: max length must be at least 2");
  return out;
}

std::size_t default_max_len(std::span<const LabeledText> corpus) {
  if (corpus.empty()) return 2;
  std::vector<std::size_t> lengths;
  lengths.reserve(corpus.size());
  for (const auto& r : corpus) lengths.push_back(tokenize(r.text).size());
  std::sort(lengths.begin(), lengths.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(lengths.size())));
  const std::size_t p95 = lengths[std::max<std::size_t>(rank, 1) - 1];
  return std::clamp<std::size_t>(p95, 2, 64);
}

SplitIndices stratified_split_indices(std::span<const std::size_t> labels, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ContractError("stratified_split: train fraction must lie in (0, 1)");
  }
  std::map<std::size_t, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  SplitIndices out;
  for (auto& [label, members] : by_class) {
    if (members.size() < 2) {
      throw ContractError("stratified_split: class " + std::to_string(label) + " has fewer than 2 records");
    }
    rng.shuffle(members.begin(), members.end());
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(members.size())));
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Split stratified_split(std::span<const LabeledText> corpus, double train_fraction, Rng& rng) {
  std::vector<std::size_t> labels;
  labels.reserve(corpus.size());
  for (const auto& r : corpus) labels.push_back(r.label);
  const auto idx = stratified_split_indices(labels, train_fraction, rng);
  Split s;
  for (auto i : idx.train) s.train.push_back(corpus[i]);
  for (auto i : idx.test) s.test.push_back(corpus[i]);
  return s;
}

ClassProfile ClassProfile::table1() {
  return {{"Appreciation", "Satisfied", "Peripheral complaint", "Demanded inquiry", "Corruption", "Lagged response",
           "Unresponsive", "Medicine payment", "Adverse behavior", "Resource nonexistence", "Grievance ascribed",
           "Obnoxious/irrelevant"},
          {0.431, 0.311, 0.082, 0.057, 0.035, 0.021, 0.020, 0.018, 0.015, 0.006, 0.003, 0.002}};
}

void ClassProfile::validate() const {
  if (names.empty() || names.size() != proportions.size()) {
    throw ContractError("class profile needs one proportion per class");
  }
  double sum = 0.0;
  for (double p : proportions) {
    if (!(p > 0.0 && p <= 1.0)) throw ContractError("class proportions must lie in (0, 1]");
    sum += p;
  }
  // Published percentages are rounded and may miss 100% by a few tenths.
  if (std::abs(sum - 1.0) > 0.005) throw ContractError("class proportions must sum to 1");
}

namespace {

std::string make_word(Rng& rng, std::span<const std::string_view> syllables, std::size_t count,
                      std::span<const std::string_view> endings) {
  std::string w;
  for (std::size_t i = 0; i < count; ++i) w += syllables[rng.below(syllables.size())];
  w += endings[rng.below(endings.size())];
  return w;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

// One spelling edit of the kind seen in informal Roman Urdu: doubled
// letters, dropped letters or swapped vowels.
std::string perturb(std::string w, Rng& rng) {
  switch (rng.below(3)) {
    case 0: {
      const auto pos = rng.below(w.size());
      w.insert(pos, 1, w[pos]);
      break;
    }
    case 1:
      if (w.size() > 3) {
        w.erase(rng.below(w.size()), 1);
        break;
      }
      [[fallthrough]];
    default: {
      std::vector<std::size_t> vowels;
      for (std::size_t i = 0; i < w.size(); ++i)
        if (is_vowel(w[i])) vowels.push_back(i);
      static constexpr char kVowels[] = {'a', 'e', 'i', 'o', 'u'};
      if (vowels.empty()) {
        w += kVowels[rng.below(5)];
      } else {
        const auto pos = vowels[rng.below(vowels.size())];
        char c;
        do {
          c = kVowels[rng.below(5)];
        } while (c == w[pos]);
        w[pos] = c;
      }
      break;
    }
  }
  return w;
}

}  // namespace

SyntheticLexicon SyntheticLexicon::make(std::size_t classes, std::size_t per_language) {
  static constexpr std::string_view kEnSyl[] = {"ba", "co", "de", "fi", "ga", "lo", "mu", "pe", "ra",
                                                "si", "to", "vi", "we", "ne", "ho", "ju", "ki", "pa",
                                                "st", "br", "cl", "tr", "pl", "gr"};
  static constexpr std::string_view kEnEnd[] = {"n", "t", "rd", "ll", "ck", "st", "ng", "r", "m", "x", "ed", "er"};
  static constexpr std::string_view kUrSyl[] = {"kha", "gha", "sha", "cha", "aa", "ee", "ya", "wa", "ra",
                                                "na", "ja", "ba", "ma", "ta", "da", "za", "qa", "la",
                                                "pu", "ki", "mi", "so", "hu", "dil"};
  static constexpr std::string_view kUrEnd[] = {"i", "a", "an", "ay", "on", "ein", "ri", "ni", "ga", "iyan", "wala"};

  SyntheticLexicon lex;
  lex.english_fillers = {"the", "is", "a", "and", "to", "of", "it", "was", "for", "my", "very", "please", "sir", "this", "that"};
  lex.urdu_fillers = {"hai", "ka", "ki", "ke", "ko", "se", "mein", "nahi", "tha", "aur", "bhi", "yeh", "wo", "hum", "ap"};
  std::set<std::string> used(lex.english_fillers.begin(), lex.english_fillers.end());
  used.insert(lex.urdu_fillers.begin(), lex.urdu_fillers.end());

  Rng rng(0x5eed1e71c0dULL);
  auto fresh = [&](bool english) {
    while (true) {
      std::string w = english ? make_word(rng, kEnSyl, 1 + rng.below(2), kEnEnd)
                              : make_word(rng, kUrSyl, 2 + rng.below(2), kUrEnd);
      if (w.size() >= 4 && used.insert(w).second) return w;
    }
  };
  lex.english.resize(classes);
  lex.urdu.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_language; ++i) {
      lex.english[c].push_back(fresh(true));
      lex.urdu[c].push_back(fresh(false));
    }
  }
  return lex;
}

std::vector<std::size_t> allocate_counts(const ClassProfile& profile, std::size_t n) {
  profile.validate();
  const std::size_t classes = profile.size();
  if (n < 2 * classes) throw ContractError("gen_synthetic: too few records for the class profile");
  std::vector<std::size_t> counts(classes);
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  double total = 0.0;
  for (double p : profile.proportions) total += p;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = profile.proportions[c] / total * static_cast<double>(n);
    counts[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; assigned < n; ++i, ++assigned) ++counts[remainders[i % classes].second];
  // Every class keeps at least two records so it can be split; the largest class pays.
  for (std::size_t c = 0; c < classes; ++c) {
    while (counts[c] < 2) {
      const auto big = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      --counts[big];
      ++counts[c];
    }
  }
  return counts;
}

std::vector<LabeledText> gen_synthetic(const ClassProfile& profile, std::size_t n, double mix_rate,
                                       double noise_rate, Rng& rng) {
  SyntheticOptions opts;
  opts.mix_rate = mix_rate;
  opts.noise_rate = noise_rate;
  return gen_synthetic(profile, n, opts, rng);
}

std::vector<LabeledText> gen_synthetic(const ClassProfile& profile, std::size_t n, const SyntheticOptions& opts,
                                       Rng& rng) {
  const auto counts = allocate_counts(profile, n);
  const std::size_t classes = profile.size();
  if (opts.min_tokens < 2 || opts.max_tokens < opts.min_tokens) {
    throw ContractError("gen_synthetic: token range must start at 2 or more");
  }
  const auto lex = SyntheticLexicon::make(classes);

  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t c = 0; c < classes; ++c) order.insert(order.end(), counts[c], c);
  rng.shuffle(order.begin(), order.end());

  std::vector<LabeledText> out;
  out.reserve(n);
  for (std::size_t label : order) {
    const bool base_english = rng.bernoulli(0.5);
    const std::size_t len = opts.min_tokens + rng.below(opts.max_tokens - opts.min_tokens + 1);
    std::vector<std::string> tokens;
    bool has_keyword = false;
    for (std::size_t t = 0; t < len; ++t) {
      const bool english = rng.bernoulli(opts.mix_rate) ? !base_english : base_english;
      const bool filler = rng.bernoulli(opts.filler_rate);
      const auto& pool = filler ? (english ? lex.english_fillers : lex.urdu_fillers)
                                : (english ? lex.english[label] : lex.urdu[label]);
      has_keyword = has_keyword || !filler;
      tokens.push_back(pool[rng.below(pool.size())]);
    }
    if (!has_keyword) {
      const auto& pool = base_english ? lex.english[label] : lex.urdu[label];
      tokens[rng.below(len)] = pool[rng.below(pool.size())];
    }
    for (auto& tok : tokens) {
      if (rng.bernoulli(opts.noise_rate)) tok = perturb(tok, rng);
    }
    std::string text;
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      if (t) text += ' ';
      text += tokens[t];
    }
    out.push_back({std::move(text), label});
  }
  return out;
}

}  // namespace mcm
