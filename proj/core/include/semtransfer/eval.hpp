#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semtransfer/matrix.hpp"
#include "semtransfer/split.hpp"

namespace semtransfer {

/// Probability that a random positive outscores a random negative, ties
/// counting one half (Mann-Whitney U with average ranks). Throws
/// ValidationError("degenerate AUC") without both classes.
double roc_auc(std::span<const double> scores, const std::vector<bool>& positives);

/// Mean over positives of precision at each positive's rank. Ranking is by
/// descending score, ties by position. Throws without positives.
double average_precision(std::span<const double> scores, const std::vector<bool>& positives);

enum class Protocol { NovelOnly, WithDistractors };

std::string to_string(Protocol p);
Protocol parse_protocol(std::string_view name);

struct EvalReport {
  Protocol protocol = Protocol::NovelOnly;
  std::vector<std::pair<std::string, double>> auc;  // per novel category, in score column order
  double mean_auc = 0.0;
  double accuracy = 0.0;
  std::vector<std::pair<std::string, double>> average_precision;
  double mean_ap = 0.0;
  bool has_ap = false;
  std::vector<std::string> skipped;  // categories without positives or negatives
  std::size_t novel_test_instances = 0;
  std::size_t distractor_instances = 0;

  bool operator==(const EvalReport&) const = default;
};

/// Per-novel-category AUC plus multiclass accuracy over novel test instances.
/// NovelOnly negatives are test instances of the other novel categories;
/// WithDistractors adds every known-category test instance as a negative.
/// Score columns must be the novel categories; every scored instance needs a
/// row (ValidationError otherwise).
EvalReport evaluate_zero_shot(const CategoryScoreMatrix& scores, const LabelMap& truth, const DatasetSplit& split,
                              Protocol protocol);

/// Mean of per-category AP over the matrix's rows. Every row needs a truth label.
double mean_ap(const CategoryScoreMatrix& scores, const LabelMap& truth,
               std::vector<std::pair<std::string, double>>* per_category = nullptr);

std::string report_to_json(const EvalReport& report);
std::string reports_to_json(std::span<const EvalReport> reports);
/// category<TAB>auc<TAB>ap rows with a header.
std::string report_to_tsv(const EvalReport& report);

}  // namespace semtransfer
