// SPDX-License-Identifier: Apache-2.0
#include "mcm/experiment.hpp"

#include <fstream>

#include "mcm/errors.hpp"

namespace mcm {

PreparedData prepare_data(std::span<const LabeledText> train, std::span<const LabeledText> test, const LabelSet& labels,
                          std::size_t min_count, std::size_t max_len) {
  if (train.empty()) throw ContractError("training split is empty");
  if (test.empty()) throw ContractError("test split is empty");
  PreparedData d;
  d.labels = labels;
  d.vocab = Vocabulary::build(train, min_count);
  const std::size_t len = max_len == 0 ? default_max_len(train) : max_len;
  d.train = encode(train, d.vocab, len);
  d.test = encode(test, d.vocab, len);
  for (const auto& r : train) {
    std::vector<std::size_t> ids;
    for (const auto& t : tokenize(r.text)) ids.push_back(d.vocab.id_of(t));
    d.train_tokens.push_back(std::move(ids));
  }
  return d;
}

std::string variant_name(EmbeddingMode mode, bool attention) {
  std::string n = "McM_";
  switch (mode) {
    case EmbeddingMode::elmo_like: n += "E"; break;
    case EmbeddingMode::random: n += "R"; break;
    case EmbeddingMode::domain: n += "D"; break;
  }
  if (attention) n += "A";
  return n;
}

EmbeddingTable make_embedding(EmbeddingMode mode, std::size_t dim, const PreparedData& data,
                              const SkipGramConfig& skipgram, Rng& rng) {
  switch (mode) {
    case EmbeddingMode::elmo_like: return char_compose_table(data.vocab.tokens(), dim);
    case EmbeddingMode::random: return init_random(data.vocab.size(), dim, rng);
    case EmbeddingMode::domain: {
      SkipGramConfig sg = skipgram;
      sg.dim = dim;
      return train_skipgram(data.train_tokens, data.vocab.size(), sg, rng);
    }
  }
  throw ConfigError("unknown embedding mode");
}

ModelConfig resolve_model_config(const RunConfig& cfg, const PreparedData& data, ModelKind kind) {
  ModelConfig m = cfg.widths;
  m.kind = kind;
  m.vocab_size = data.vocab.size();
  m.classes = data.labels.size();
  m.max_len = data.train.max_len;
  m.dropout = cfg.train.dropout;
  if (kind == ModelKind::baseline) {
    m.embedding_mode = EmbeddingMode::random;
    m.attention = false;
  } else {
    m.embedding_mode = cfg.train.embedding_mode;
    m.attention = cfg.train.attention;
  }
  m.embedding_dim = cfg.embedding_dim == 0 ? default_embedding_dim(m.embedding_mode) : cfg.embedding_dim;
  m.validate();
  return m;
}

TrainedRun train_run(const RunConfig& cfg, const PreparedData& data, ModelKind kind) {
  TrainedRun run;
  run.model = resolve_model_config(cfg, data, kind);
  run.name = kind == ModelKind::baseline ? kBaselineName : variant_name(run.model.embedding_mode, run.model.attention);
  Rng master(cfg.train.seed);
  Rng emb_rng = master.fork("embedding");
  Rng init_rng = master.fork("init");
  auto table = make_embedding(run.model.embedding_mode, run.model.embedding_dim, data, cfg.skipgram, emb_rng);
  auto model = build_classifier(run.model, std::move(table), init_rng);
  run.fit = fit(*model, data.train, data.test, cfg.train, data.labels.size());
  return run;
}

MatrixResult run_experiment_matrix(const PreparedData& data, const RunConfig& base) {
  MatrixResult out;
  auto record = [&](const std::string& name, const std::vector<std::string>& comps, auto&& body) {
    try {
      TrainedRun run = body();
      for (std::size_t c = 0; c < run.fit.components.size(); ++c) {
        out.rows.push_back({name, run.fit.components[c], run.fit.best_reports[c], "ok"});
      }
      if (run.model.kind == ModelKind::mcm) out.curves.emplace_back(name, curve_csv(run.fit));
    } catch (const std::exception& e) {
      const EvalReport empty;
      for (const auto& c : comps) out.rows.push_back({name, c, empty, std::string("failed: ") + e.what()});
    }
  };
  record(kBaselineName, {"-"}, [&] { return train_run(base, data, ModelKind::baseline); });
  const std::vector<std::string> comps{"cnn", "slstm", "lstm", "discriminator"};
  for (auto mode : {EmbeddingMode::elmo_like, EmbeddingMode::random, EmbeddingMode::domain}) {
    for (bool attention : {false, true}) {
      RunConfig cfg = base;
      cfg.train.embedding_mode = mode;
      cfg.train.attention = attention;
      if (mode != base.train.embedding_mode) cfg.embedding_dim = 0;
      record(variant_name(mode, attention), comps, [&] { return train_run(cfg, data, ModelKind::mcm); });
    }
  }
  return out;
}

std::string results_csv(const MatrixResult& m) {
  std::string out = "model,component,accuracy,precision,recall,f1,status\n";
  for (const auto& r : m.rows) {
    out += r.model + "," + r.component + ",";
    if (r.status == "ok") {
      out += format_metric(r.report.accuracy) + "," + format_metric(r.report.macro_precision) + "," +
             format_metric(r.report.macro_recall) + "," + format_metric(r.report.macro_f1);
    } else {
      out += ",,,";
    }
    std::string status = r.status;
    for (char& ch : status) {
      if (ch == ',' || ch == '\n' || ch == '"') ch = ' ';
    }
    out += "," + status + "\n";
  }
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("cannot write " + path.string());
}

}  // namespace

void write_matrix(const MatrixResult& m, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "results.csv", results_csv(m));
  for (const auto& [name, csv] : m.curves) write_file(dir / ("curve_" + name + ".csv"), csv);
}

std::size_t GridSpec::size() const {
  return kernel1.size() * kernel2.size() * dropout.size() * optimizer.size() * learning_rate.size();
}

GridResult grid_search(std::span<const LabeledText> train, const LabelSet& labels, const RunConfig& base,
                       const GridSpec& spec) {
  if (spec.size() == 0) throw ConfigError("grid has an empty axis");
  Rng split_rng = Rng(base.train.seed).fork("grid");
  std::vector<std::size_t> y;
  for (const auto& r : train) y.push_back(r.label);
  const auto idx = stratified_split_indices(y, 1.0 - base.train.validation_fraction, split_rng);
  std::vector<LabeledText> fit_part, val_part;
  for (auto i : idx.train) fit_part.push_back(train[i]);
  for (auto i : idx.test) val_part.push_back(train[i]);
  const auto data = prepare_data(fit_part, val_part, labels, base.min_count, base.max_len);

  GridResult g;
  double best = -1.0;
  for (auto k1 : spec.kernel1) {
    for (auto k2 : spec.kernel2) {
      for (auto dr : spec.dropout) {
        for (auto opt : spec.optimizer) {
          for (auto lr : spec.learning_rate) {
            GridTrial t;
            t.config = base;
            t.config.widths.kernel1 = k1;
            t.config.widths.kernel2 = k2;
            t.config.train.dropout = dr;
            t.config.train.optimizer = opt;
            t.config.train.learning_rate = lr;
            t.config.train.embedding_mode = EmbeddingMode::random;
            t.config.train.attention = false;
            t.config.train.select_on = SelectOn::test;
            try {
              auto run = train_run(t.config, data);
              t.validation_f1 = run.fit.best_reports.back().macro_f1;
            } catch (const std::exception& e) {
              t.status = std::string("failed: ") + e.what();
            }
            if (t.status == "ok" && t.validation_f1 > best) {
              best = t.validation_f1;
              g.best = g.trials.size();
            }
            g.trials.push_back(std::move(t));
          }
        }
      }
    }
  }
  if (best < 0.0) throw ContractError("every grid trial failed");
  return g;
}

std::string grid_csv(const GridResult& g) {
  std::string out = "kernel1,kernel2,dropout,optimizer,learning_rate,validation_f1,status\n";
  for (const auto& t : g.trials) {
    const auto& c = t.config;
    out += std::to_string(c.widths.kernel1) + "," + std::to_string(c.widths.kernel2) + "," +
           format_metric(c.train.dropout) + "," + to_string(c.train.optimizer) + "," +
           format_metric(c.train.learning_rate) + "," + format_metric(t.validation_f1) + "," + t.status + "\n";
  }
  return out;
}

}  // namespace mcm
