// SPDX-License-Identifier: Apache-2.0
#include "options.hpp"

#include <CLI11.hpp>
#include <fstream>

#include "mcm/errors.hpp"

namespace mcm::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void add_data_options(CLI::App& app, DataOptions& o, bool need_train) {
  if (need_train) app.add_option("--train", o.train_path, "training TSV (required)");
  app.add_option("--test", o.test_path, "test TSV (required)");
  app.add_option("--labels", o.labels_path, "file with one class name per line");
  app.add_option("--text-column", o.text_column, "0-based column holding the text");
  app.add_option("--label-column", o.label_column, "0-based column holding the label");
  app.add_flag("--header", o.header, "skip the first line of each TSV");
}

void add_train_options(CLI::App& app, TrainOptions& o) {
  add_data_options(app, o.data, true);
  app.add_option("--out", o.out, "output directory");
  app.add_option("--seed", o.seed, "master seed");
  app.add_option("--epochs", o.epochs)->check(CLI::PositiveNumber);
  app.add_option("--batch-size", o.batch_size)->check(CLI::Range(2, 1 << 20));
  app.add_option("--lr", o.lr)->check(CLI::PositiveNumber);
  app.add_option("--optimizer", o.optimizer)->check(CLI::IsMember({"adam", "adadelta", "sgd"}));
  app.add_option("--dropout", o.dropout)->check(CLI::Range(0.0, 0.999999));
  app.add_option("--embedding", o.embedding)->check(CLI::IsMember({"elmo_like", "random", "domain"}));
  app.add_option("--embedding-dim", o.embedding_dim, "0 picks 1024 for elmo_like, 300 otherwise");
  app.add_flag("--attention", o.attention, "soft attention between the stacked layers");
  app.add_option("--max-len", o.max_len, "0 derives it from the training texts");
  app.add_option("--min-count", o.min_count)->check(CLI::PositiveNumber);
  app.add_option("--select-on", o.select_on)->check(CLI::IsMember({"test", "validation"}));
  app.add_option("--kernel1", o.kernel1)->check(CLI::PositiveNumber);
  app.add_option("--kernel2", o.kernel2)->check(CLI::PositiveNumber);
  app.add_option("--filters", o.filters)->check(CLI::PositiveNumber);
  app.add_option("--lstm-hidden", o.lstm_hidden)->check(CLI::PositiveNumber);
  app.add_option("--dense1", o.dense1)->check(CLI::PositiveNumber);
  app.add_option("--dense2", o.dense2)->check(CLI::PositiveNumber);
  app.add_flag("--detach-features", o.detach_features, "stop discriminator gradients at the learners");
  app.add_option("--skipgram-epochs", o.skipgram_epochs)->check(CLI::PositiveNumber);
  app.add_option("--skipgram-window", o.skipgram_window)->check(CLI::PositiveNumber);
}

RunConfig TrainOptions::run_config() const {
  RunConfig c;
  c.train.epochs = epochs;
  c.train.batch_size = batch_size;
  c.train.learning_rate = lr;
  c.train.optimizer = parse_optimizer(optimizer);
  c.train.dropout = dropout;
  c.train.seed = seed;
  c.train.attention = attention;
  c.train.embedding_mode = parse_embedding_mode(embedding);
  c.train.select_on = parse_select_on(select_on);
  c.widths.kernel1 = kernel1;
  c.widths.kernel2 = kernel2;
  c.widths.filters = filters;
  c.widths.lstm_hidden = lstm_hidden;
  c.widths.dense1 = dense1;
  c.widths.dense2 = dense2;
  c.widths.detach_features = detach_features;
  c.min_count = min_count;
  c.max_len = max_len;
  c.embedding_dim = embedding_dim;
  c.skipgram.epochs = skipgram_epochs;
  c.skipgram.window = skipgram_window;
  c.train.validate();
  return c;
}

GridSpec TrainOptions::grid_spec() const {
  GridSpec g;
  g.kernel1 = grid_kernel1;
  g.kernel2 = grid_kernel2;
  g.dropout = grid_dropout;
  g.learning_rate = grid_lr;
  g.optimizer.clear();
  for (const auto& s : grid_optimizer) g.optimizer.push_back(parse_optimizer(s));
  return g;
}

void apply_config_file(CLI::App& app, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    for (char& ch : key) {
      if (ch == '_') ch = '-';
    }
    if (key == "config") throw ConfigError(where + ": config files cannot include other config files");
    CLI::Option* opt = app.get_option_no_throw("--" + key);
    if (opt == nullptr) throw ConfigError(where + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    opt->clear();
    // Lists may be written comma-separated.
    if (opt->get_items_expected_max() > 1) {
      std::size_t b = 0;
      while (b <= value.size()) {
        auto e = value.find(',', b);
        if (e == std::string::npos) e = value.size();
        opt->add_result(trim(value.substr(b, e - b)));
        b = e + 1;
      }
    } else {
      opt->add_result(value);
    }
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw ConfigError(where + ": " + e.what());
    }
  }
}

LabelSet read_labels(const DataOptions& o) {
  if (o.labels_path.empty()) return LabelSet::table1();
  std::ifstream in(o.labels_path);
  if (!in) throw IoError("cannot open label file " + o.labels_path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (!line.empty()) names.push_back(line);
  }
  return LabelSet(std::move(names));
}

TsvLayout layout_of(const DataOptions& o) { return {o.text_column, o.label_column, o.header}; }

}  // namespace mcm::cli
