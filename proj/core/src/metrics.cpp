// SPDX-License-Identifier: Apache-2.0
#include "mcm/metrics.hpp"

#include <cstdio>
#include <numeric>

#include "mcm/errors.hpp"

namespace mcm {

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted) {
  if (truth >= classes_ || predicted >= classes_) throw ContractError("confusion matrix: label out of range");
  ++counts_[truth * classes_ + predicted];
}

std::size_t ConfusionMatrix::total() const { return std::accumulate(counts_.begin(), counts_.end(), std::size_t{0}); }

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t c = 0; c < classes_; ++c) t += count(c, c);
  return t;
}

std::size_t ConfusionMatrix::false_positives(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t r = 0; r < classes_; ++r)
    if (r != c) s += count(r, c);
  return s;
}

std::size_t ConfusionMatrix::false_negatives(std::size_t c) const {
  std::size_t s = 0;
  for (std::size_t p = 0; p < classes_; ++p)
    if (p != c) s += count(c, p);
  return s;
}

ClassScores zero_division_policy(std::size_t tp, std::size_t fp, std::size_t fn) {
  ClassScores s;
  const auto t = static_cast<double>(tp);
  if (tp + fp > 0) s.precision = t / static_cast<double>(tp + fp);
  if (tp + fn > 0) s.recall = t / static_cast<double>(tp + fn);
  if (s.precision + s.recall > 0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
  return s;
}

EvalReport evaluate(std::span<const std::size_t> truth, std::span<const std::size_t> predicted, std::size_t classes) {
  if (truth.size() != predicted.size()) throw ContractError("evaluate: label sequences differ in length");
  if (truth.empty()) throw ContractError("evaluate: no labels");
  if (classes == 0) throw ContractError("evaluate: zero classes");
  EvalReport r;
  r.confusion = ConfusionMatrix(classes);
  for (std::size_t i = 0; i < truth.size(); ++i) r.confusion.add(truth[i], predicted[i]);

  r.precision.resize(classes);
  r.recall.resize(classes);
  r.f1.resize(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    const auto s = zero_division_policy(r.confusion.true_positives(c), r.confusion.false_positives(c),
                                        r.confusion.false_negatives(c));
    r.precision[c] = s.precision;
    r.recall[c] = s.recall;
    r.f1[c] = s.f1;
  }
  const double n = static_cast<double>(classes);
  r.macro_precision = std::accumulate(r.precision.begin(), r.precision.end(), 0.0) / n;
  r.macro_recall = std::accumulate(r.recall.begin(), r.recall.end(), 0.0) / n;
  r.macro_f1 = std::accumulate(r.f1.begin(), r.f1.end(), 0.0) / n;
  r.accuracy = static_cast<double>(r.confusion.trace()) / static_cast<double>(r.confusion.total());
  return r;
}

std::string format_metric(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string EvalReport::to_kv() const {
  std::string s;
  s += "accuracy=" + format_metric(accuracy) + "\n";
  s += "macro_precision=" + format_metric(macro_precision) + "\n";
  s += "macro_recall=" + format_metric(macro_recall) + "\n";
  s += "macro_f1=" + format_metric(macro_f1) + "\n";
  s += "records=" + std::to_string(confusion.total()) + "\n";
  return s;
}

std::string csv_header() { return "run,component,accuracy,precision,recall,f1"; }

std::string csv_row(std::string_view run_id, std::string_view component, const EvalReport& report) {
  std::string s(run_id);
  s += ',';
  s += component;
  for (double v : {report.accuracy, report.macro_precision, report.macro_recall, report.macro_f1}) {
    s += ',';
    s += format_metric(v);
  }
  return s;
}

}  // namespace mcm
