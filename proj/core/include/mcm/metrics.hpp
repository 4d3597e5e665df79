// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mcm {

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 0) : classes_(classes), counts_(classes * classes, 0) {}

  void add(std::size_t truth, std::size_t predicted);
  std::size_t count(std::size_t truth, std::size_t predicted) const { return counts_.at(truth * classes_ + predicted); }
  std::size_t classes() const { return classes_; }
  std::size_t total() const;
  std::size_t trace() const;

  std::size_t true_positives(std::size_t c) const { return count(c, c); }
  /// Column c minus the diagonal.
  std::size_t false_positives(std::size_t c) const;
  /// Row c minus the diagonal.
  std::size_t false_negatives(std::size_t c) const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::size_t> counts_;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-class scores; any zero denominator yields 0 for that score.
ClassScores zero_division_policy(std::size_t tp, std::size_t fp, std::size_t fn);

struct EvalReport {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  ConfusionMatrix confusion;

  /// "key=value" lines.
  std::string to_kv() const;
};

/// Accuracy plus macro precision/recall/F1 averaged over all `classes`.
/// Macro F1 is the mean of per-class F1, not the F1 of the macro means.
EvalReport evaluate(std::span<const std::size_t> truth, std::span<const std::size_t> predicted, std::size_t classes);

/// "run,component,accuracy,precision,recall,f1"
std::string csv_header();
std::string csv_row(std::string_view run_id, std::string_view component, const EvalReport& report);

/// Fixed six-decimal rendering used across report files.
std::string format_metric(double v);

}  // namespace mcm
