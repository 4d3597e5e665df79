// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "mcm/checkpoint.hpp"
#include "mcm/errors.hpp"
#include "mcm/experiment.hpp"
#include "options.hpp"

namespace fs = std::filesystem;
using namespace mcm;
using namespace mcm::cli;

namespace {

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
}

std::string histogram(const LabelSet& labels, std::span<const LabeledText> train, std::span<const LabeledText> test) {
  std::vector<std::size_t> a(labels.size()), b(labels.size());
  for (const auto& r : train) ++a[r.label];
  for (const auto& r : test) ++b[r.label];
  const double total = static_cast<double>(train.size() + test.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-24s %8s %8s %8s %8s\n", "class", "train", "test", "total", "share");
  out += buf;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    std::snprintf(buf, sizeof buf, "%-24s %8zu %8zu %8zu %7.2f%%\n", labels.name(c).c_str(), a[c], b[c], a[c] + b[c],
                  100.0 * static_cast<double>(a[c] + b[c]) / total);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "%-24s %8zu %8zu %8zu\n", "total", train.size(), test.size(),
                train.size() + test.size());
  return out + buf;
}

void require_value(const std::string& v, const char* flag) {
  if (v.empty()) throw ConfigError(std::string(flag) + " is required");
}

// Loads a TSV, echoing rejections to stderr. Unknown labels are fatal.
std::vector<LabeledText> load_records(const std::string& path, const LabelSet& labels, const TsvLayout& layout) {
  if (!fs::exists(path)) throw IoError("no such file: " + path);
  auto res = load_tsv(path, labels, layout);
  if (!res.rejections.empty()) {
    std::cerr << path << ": " << res.rejections.size() << " of " << res.lines_read << " lines rejected\n"
              << res.report();
  }
  const auto unknown = res.unknown_labels();
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + ("'" + u + "'");
    throw ContractError(path + ": labels not in the label set: " + list);
  }
  if (res.records.empty()) throw ContractError(path + ": no usable records");
  return std::move(res.records);
}

std::string component_rows(const std::string& name, const std::vector<std::string>& comps,
                           const std::vector<EvalReport>& reports) {
  MatrixResult m;
  for (std::size_t c = 0; c < comps.size(); ++c) m.rows.push_back({name, comps[c], reports[c], "ok"});
  return results_csv(m);
}

void print_reports(const std::string& name, const std::vector<std::string>& comps,
                   const std::vector<EvalReport>& reports) {
  std::printf("%-10s %-14s %9s %9s %9s %9s\n", "model", "component", "accuracy", "precision", "recall", "f1");
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const auto& r = reports[c];
    std::printf("%-10s %-14s %9.4f %9.4f %9.4f %9.4f\n", name.c_str(), comps[c].c_str(), r.accuracy,
                r.macro_precision, r.macro_recall, r.macro_f1);
  }
}

struct GenOptions {
  std::size_t n = 10000;
  std::uint64_t seed = 1;
  std::string out = "data";
  double mix_rate = 0.5;
  double noise_rate = 0.1;
  double train_fraction = 0.8;
  std::string profile = "table1";
};

int cmd_gen_synth(const GenOptions& o) {
  const auto profile = ClassProfile::table1();
  const auto labels = profile.labels();
  Rng master(o.seed);
  Rng gen_rng = master.fork("corpus");
  Rng split_rng = master.fork("split");
  const auto corpus = gen_synthetic(profile, o.n, o.mix_rate, o.noise_rate, gen_rng);
  const auto split = stratified_split(corpus, o.train_fraction, split_rng);
  make_dir(o.out);
  for (auto [name, part] : {std::pair{"train.tsv", &split.train}, std::pair{"test.tsv", &split.test}}) {
    const fs::path path = fs::path(o.out) / name;
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path.string());
    write_tsv(f, *part, labels);
    f.close();
    if (!f) throw IoError("cannot write " + path.string());
  }
  std::cout << histogram(labels, split.train, split.test);
  return 0;
}

int cmd_train(const TrainOptions& o) {
  require_value(o.data.train_path, "--train");
  require_value(o.data.test_path, "--test");
  const auto cfg = o.run_config();
  const auto labels = read_labels(o.data);
  const auto train = load_records(o.data.train_path, labels, layout_of(o.data));
  const auto test = load_records(o.data.test_path, labels, layout_of(o.data));
  const auto data = prepare_data(train, test, labels, cfg.min_count, cfg.max_len);
  auto run = train_run(cfg, data);
  make_dir(o.out);
  const fs::path dir(o.out);
  save_checkpoint(dir / "model.ckpt", *run.fit.best, data.vocab, labels);
  write_text_file(dir / "results.csv", component_rows(run.name, run.fit.components, run.fit.best_reports));
  write_text_file(dir / "curve.csv", curve_csv(run.fit));
  std::printf("%s: best epoch %zu of %zu\n", run.name.c_str(), run.fit.best_epoch, run.fit.curve.size());
  print_reports(run.name, run.fit.components, run.fit.best_reports);
  return 0;
}

struct EvalOptions {
  DataOptions data;
  std::string checkpoint;
  std::string out;
};

int cmd_eval(const EvalOptions& o) {
  require_value(o.checkpoint, "--checkpoint");
  require_value(o.data.test_path, "--test");
  auto ck = load_checkpoint(o.checkpoint);
  const auto records = load_records(o.data.test_path, ck.labels, layout_of(o.data));
  const auto corpus = encode(records, ck.vocab, ck.model->config().max_len);
  const auto reports = evaluate_components(*ck.model, corpus, ck.labels.size());
  const std::string name = ck.model->config().kind == ModelKind::baseline
                               ? kBaselineName
                               : variant_name(ck.model->config().embedding_mode, ck.model->config().attention);
  print_reports(name, ck.model->components(), reports);
  if (!o.out.empty()) write_text_file(o.out, component_rows(name, ck.model->components(), reports));
  return 0;
}

int cmd_predict(const std::string& checkpoint) {
  auto ck = load_checkpoint(checkpoint);
  const std::size_t len = ck.model->config().max_len;
  std::string line;
  char buf[64];
  while (std::getline(std::cin, line)) {
    if (tokenize(line).empty()) {
      std::cout << "UNKNOWN\t0.0000\n";
      continue;
    }
    const auto ids = encode_text(line, ck.vocab, len);
    const auto p = predict(*ck.model, ids);
    std::snprintf(buf, sizeof buf, "%.4f", p.probs[p.label]);
    std::cout << ck.labels.name(p.label) << '\t' << buf << '\n';
  }
  return 0;
}

int cmd_matrix(const TrainOptions& o) {
  require_value(o.data.train_path, "--train");
  require_value(o.data.test_path, "--test");
  auto cfg = o.run_config();
  const auto labels = read_labels(o.data);
  const auto train = load_records(o.data.train_path, labels, layout_of(o.data));
  const auto test = load_records(o.data.test_path, labels, layout_of(o.data));
  make_dir(o.out);
  const fs::path dir(o.out);
  if (o.grid) {
    const auto g = grid_search(train, labels, cfg, o.grid_spec());
    write_text_file(dir / "grid.csv", grid_csv(g));
    const auto& best = g.trials[g.best].config;
    cfg.widths.kernel1 = best.widths.kernel1;
    cfg.widths.kernel2 = best.widths.kernel2;
    cfg.train.dropout = best.train.dropout;
    cfg.train.optimizer = best.train.optimizer;
    cfg.train.learning_rate = best.train.learning_rate;
    std::printf("grid: %zu trials, best kernel1=%zu kernel2=%zu dropout=%g optimizer=%s lr=%g (validation f1 %.4f)\n",
                g.trials.size(), cfg.widths.kernel1, cfg.widths.kernel2, cfg.train.dropout,
                to_string(cfg.train.optimizer), cfg.train.learning_rate, g.trials[g.best].validation_f1);
  }
  const auto data = prepare_data(train, test, labels, cfg.min_count, cfg.max_len);
  const auto m = run_experiment_matrix(data, cfg);
  write_matrix(m, dir);
  std::cout << results_csv(m);
  for (const auto& r : m.rows) {
    if (r.status != "ok") return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Bilingual SMS classifier: synthetic data, training, evaluation and prediction");
  app.require_subcommand(1);
  std::string config;

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-synth", "generate a synthetic code-switched corpus");
  gen_cmd->add_option("--n", gen.n, "number of records")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen.seed);
  gen_cmd->add_option("--out", gen.out, "output directory");
  gen_cmd->add_option("--mix-rate", gen.mix_rate)->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--noise-rate", gen.noise_rate)->check(CLI::Range(0.0, 1.0));
  gen_cmd->add_option("--train-fraction", gen.train_fraction)->check(CLI::Range(0.01, 0.99));
  gen_cmd->add_option("--profile", gen.profile)->check(CLI::IsMember({"table1"}));

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train one model and keep its best epoch");
  add_train_options(*train_cmd, train);

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint on a labelled TSV");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "model file written by train (required)");
  add_data_options(*eval_cmd, ev.data, false);
  eval_cmd->add_option("--out", ev.out, "also write the rows as CSV");

  std::string predict_ckpt;
  auto* predict_cmd = app.add_subcommand("predict", "label raw text lines from standard input");
  predict_cmd->add_option("--checkpoint", predict_ckpt)->required();

  TrainOptions matrix;
  auto* matrix_cmd = app.add_subcommand("matrix", "baseline plus the six embedding/attention variants");
  add_train_options(*matrix_cmd, matrix);
  matrix_cmd->add_flag("--grid", matrix.grid, "grid-search kernels, dropout, optimizer and lr on McM_R first");
  matrix_cmd->add_option("--grid-kernel1", matrix.grid_kernel1)->delimiter(',');
  matrix_cmd->add_option("--grid-kernel2", matrix.grid_kernel2)->delimiter(',');
  matrix_cmd->add_option("--grid-dropout", matrix.grid_dropout)->delimiter(',');
  matrix_cmd->add_option("--grid-optimizer", matrix.grid_optimizer)->delimiter(',');
  matrix_cmd->add_option("--grid-lr", matrix.grid_lr)->delimiter(',');

  for (auto* cmd : {gen_cmd, train_cmd, eval_cmd, matrix_cmd}) {
    cmd->add_option("--config", config, "key=value file; command-line flags take precedence");
  }

  CLI11_PARSE(app, argc, argv);
  try {
    CLI::App* cmd = app.get_subcommands().front();
    if (!config.empty()) apply_config_file(*cmd, config);
    if (cmd == gen_cmd) return cmd_gen_synth(gen);
    if (cmd == train_cmd) return cmd_train(train);
    if (cmd == eval_cmd) return cmd_eval(ev);
    if (cmd == predict_cmd) return cmd_predict(predict_ckpt);
    return cmd_matrix(matrix);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
