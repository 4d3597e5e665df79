// SPDX-License-Identifier: Apache-2.0
#include "mcm/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "mcm/errors.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace mcm {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'M', '1'};

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t parse_size(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size() || v[0] == '-') throw ConfigError("bad integer for " + key + ": '" + v + "'");
  return static_cast<std::size_t>(n);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::string buf) : buf_(std::move(buf)) {}
  void raw(void* p, std::size_t n, const std::string& field) {
    if (buf_.size() - pos_ < n) throw LoadError(field, "file is truncated");
    std::memcpy(p, buf_.data() + pos_, n);
    pos_ += n;
  }
  std::uint64_t u64(const std::string& field) {
    std::uint64_t v = 0;
    raw(&v, 8, field);
    return v;
  }
  std::string str(const std::string& field) {
    const auto n = u64(field);
    if (n > remaining()) throw LoadError(field, "length exceeds file size");
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  std::string buf_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string config_to_text(const ModelConfig& c) {
  std::ostringstream o;
  o << "kind=" << (c.kind == ModelKind::mcm ? "mcm" : "baseline") << "\n"
    << "vocab_size=" << c.vocab_size << "\n"
    << "embedding_dim=" << c.embedding_dim << "\n"
    << "classes=" << c.classes << "\n"
    << "max_len=" << c.max_len << "\n"
    << "kernel1=" << c.kernel1 << "\n"
    << "kernel2=" << c.kernel2 << "\n"
    << "filters=" << c.filters << "\n"
    << "lstm_hidden=" << c.lstm_hidden << "\n"
    << "dense1=" << c.dense1 << "\n"
    << "dense2=" << c.dense2 << "\n"
    << "baseline_kernel=" << c.baseline_kernel << "\n"
    << "dropout=" << fmt_double(c.dropout) << "\n"
    << "attention=" << (c.attention ? "true" : "false") << "\n"
    << "detach_features=" << (c.detach_features ? "true" : "false") << "\n"
    << "embedding_mode=" << to_string(c.embedding_mode) << "\n";
  return o.str();
}

ModelConfig config_from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line without '=': '" + line + "'");
    if (!kv.emplace(line.substr(0, eq), line.substr(eq + 1)).second) {
      throw ConfigError("duplicate config key " + line.substr(0, eq));
    }
  }
  ModelConfig c;
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw ConfigError("missing config key " + key);
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  const auto kind = take("kind");
  if (kind == "mcm") {
    c.kind = ModelKind::mcm;
  } else if (kind == "baseline") {
    c.kind = ModelKind::baseline;
  } else {
    throw ConfigError("bad value for kind: '" + kind + "'");
  }
  c.vocab_size = parse_size("vocab_size", take("vocab_size"));
  c.embedding_dim = parse_size("embedding_dim", take("embedding_dim"));
  c.classes = parse_size("classes", take("classes"));
  c.max_len = parse_size("max_len", take("max_len"));
  c.kernel1 = parse_size("kernel1", take("kernel1"));
  c.kernel2 = parse_size("kernel2", take("kernel2"));
  c.filters = parse_size("filters", take("filters"));
  c.lstm_hidden = parse_size("lstm_hidden", take("lstm_hidden"));
  c.dense1 = parse_size("dense1", take("dense1"));
  c.dense2 = parse_size("dense2", take("dense2"));
  c.baseline_kernel = parse_size("baseline_kernel", take("baseline_kernel"));
  const auto dropout = take("dropout");
  char* end = nullptr;
  c.dropout = std::strtod(dropout.c_str(), &end);
  if (dropout.empty() || *end != '\0') throw ConfigError("bad value for dropout: '" + dropout + "'");
  c.attention = parse_bool("attention", take("attention"));
  c.detach_features = parse_bool("detach_features", take("detach_features"));
  c.embedding_mode = parse_embedding_mode(take("embedding_mode"));
  if (!kv.empty()) throw ConfigError("unknown config key " + kv.begin()->first);
  c.validate();
  return c;
}

void write_checkpoint(std::ostream& out, Classifier& model, const Vocabulary& vocab, const LabelSet& labels) {
  Writer w(out);
  w.raw(kMagic, 4);
  const std::uint32_t version = kCheckpointVersion;
  w.raw(&version, 4);
  w.str(config_to_text(model.config()));
  w.u64(vocab.min_count());
  w.u64(vocab.size());
  for (const auto& t : vocab.tokens()) w.str(t);
  w.u64(labels.size());
  for (const auto& n : labels.names()) w.str(n);
  const auto params = model.parameters();
  w.u64(params.size());
  for (const auto& p : params) {
    w.str(p.name);
    const auto& dims = p.tensor->shape().dims();
    w.u64(dims.size());
    for (auto d : dims) w.u64(d);
    w.raw(p.tensor->data().data(), p.tensor->numel() * sizeof(double));
  }
  if (!out) throw IoError("checkpoint write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(std::string(std::istreambuf_iterator<char>(in), {}));
  char magic[4];
  r.raw(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw LoadError("magic", "not a model checkpoint");
  std::uint32_t version = 0;
  r.raw(&version, 4, "version");
  if (version != kCheckpointVersion) {
    throw LoadError("version", "unsupported version " + std::to_string(version) + ", expected " +
                                   std::to_string(kCheckpointVersion));
  }

  ModelConfig cfg;
  try {
    cfg = config_from_text(r.str("config"));
  } catch (const ConfigError& e) {
    throw LoadError("config", e.what());
  }

  const auto min_count = r.u64("vocabulary");
  const auto n_tokens = r.u64("vocabulary");
  if (n_tokens > r.remaining() / 8) throw LoadError("vocabulary", "token count exceeds file size");
  std::vector<std::string> tokens;
  for (std::uint64_t i = 0; i < n_tokens; ++i) tokens.push_back(r.str("vocabulary"));
  Vocabulary vocab;
  try {
    vocab = Vocabulary::from_tokens(std::move(tokens), min_count);
  } catch (const std::exception& e) {
    throw LoadError("vocabulary", e.what());
  }
  if (vocab.size() != cfg.vocab_size) {
    throw LoadError("vocabulary", std::to_string(vocab.size()) + " tokens but config says " +
                                      std::to_string(cfg.vocab_size));
  }

  const auto n_labels = r.u64("labels");
  if (n_labels > r.remaining() / 8) throw LoadError("labels", "label count exceeds file size");
  std::vector<std::string> names;
  for (std::uint64_t i = 0; i < n_labels; ++i) names.push_back(r.str("labels"));
  LabelSet labels;
  try {
    labels = LabelSet(std::move(names));
  } catch (const std::exception& e) {
    throw LoadError("labels", e.what());
  }
  if (labels.size() != cfg.classes) {
    throw LoadError("labels", std::to_string(labels.size()) + " labels but config says " +
                                  std::to_string(cfg.classes));
  }

  Rng unused(0);
  EmbeddingTable table(Tensor(Shape{cfg.vocab_size, cfg.embedding_dim}, 0.0));
  auto model = build_classifier(cfg, std::move(table), unused);
  auto params = model->parameters();
  const auto count = r.u64("tensors");
  if (count != params.size()) {
    throw LoadError("tensors", std::to_string(count) + " tensors but the architecture has " +
                                   std::to_string(params.size()));
  }
  for (auto& p : params) {
    const auto name = r.str("tensors");
    if (name != p.name) throw LoadError(p.name, "found tensor '" + name + "' in its place");
    const auto rank = r.u64(p.name);
    const auto& dims = p.tensor->shape().dims();
    if (rank != dims.size()) throw LoadError(p.name, "rank " + std::to_string(rank) + " does not match");
    for (std::size_t i = 0; i < rank; ++i) {
      const auto d = r.u64(p.name);
      if (d != dims[i]) {
        throw LoadError(p.name, "dimension " + std::to_string(i) + " is " + std::to_string(d) + ", expected " +
                                    std::to_string(dims[i]));
      }
    }
    r.raw(p.tensor->data().data(), p.tensor->numel() * sizeof(double), p.name);
  }
  if (r.remaining() != 0) throw LoadError("trailer", std::to_string(r.remaining()) + " unexpected bytes");
  return {std::move(model), std::move(vocab), std::move(labels)};
}

void save_checkpoint(const std::filesystem::path& path, Classifier& model, const Vocabulary& vocab,
                     const LabelSet& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, model, vocab, labels);
  out.close();
  if (!out) throw IoError("cannot write checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace mcm
