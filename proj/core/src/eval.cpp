#include "semtransfer/eval.hpp"

#include <algorithm>
#include <numeric>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "semtransfer/error.hpp"
#include "semtransfer/tsv.hpp"

namespace semtransfer {

double roc_auc(std::span<const double> scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) throw ValidationError("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (positives[order[k]]) {
        rank_sum += avg_rank;
        ++pos;
      }
    }
    i = j;
  }
  const std::size_t neg = n - pos;
  if (pos == 0 || neg == 0) throw ValidationError("degenerate AUC");
  const double p = static_cast<double>(pos);
  const double u = rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(neg));
}

double average_precision(std::span<const double> scores, const std::vector<bool>& positives) {
  if (scores.size() != positives.size()) throw ValidationError("average_precision: length mismatch");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (positives[order[r]]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  if (hits == 0) throw ValidationError("average precision: category without positives");
  return sum / static_cast<double>(hits);
}

std::string to_string(Protocol p) { return p == Protocol::NovelOnly ? "novel_only" : "with_distractors"; }

Protocol parse_protocol(std::string_view name) {
  if (name == "novel_only") return Protocol::NovelOnly;
  if (name == "with_distractors") return Protocol::WithDistractors;
  throw ParseError("unknown protocol '" + std::string(name) + "'");
}

EvalReport evaluate_zero_shot(const CategoryScoreMatrix& scores, const LabelMap& truth, const DatasetSplit& split,
                              Protocol protocol) {
  const std::set<std::string> novel(split.novel_categories.begin(), split.novel_categories.end());
  const std::set<std::string> known(split.known_categories.begin(), split.known_categories.end());
  for (const auto& c : scores.categories().names()) {
    if (!novel.contains(c)) throw ValidationError("evaluation: scored category '" + c + "' is not novel");
  }

  std::vector<Eigen::Index> rows;
  std::vector<std::string> labels;
  std::vector<bool> is_novel;
  EvalReport report;
  report.protocol = protocol;
  for (const auto& [inst, _] : split.test) {
    const auto t = truth.find(inst);
    if (t == truth.end()) throw ValidationError("evaluation: no ground truth for test instance '" + inst + "'");
    const bool nov = novel.contains(t->second);
    if (!nov && !(protocol == Protocol::WithDistractors && known.contains(t->second))) continue;
    const auto r = scores.instances().find(inst);
    if (!r) throw ValidationError("evaluation: missing score row for instance '" + inst + "'");
    rows.push_back(static_cast<Eigen::Index>(*r));
    labels.push_back(t->second);
    is_novel.push_back(nov);
    nov ? ++report.novel_test_instances : ++report.distractor_instances;
  }

  const auto cats = scores.categories();
  double auc_sum = 0.0;
  for (std::size_t c = 0; c < cats.size(); ++c) {
    std::vector<double> s;
    std::vector<bool> pos;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      s.push_back(scores.values(rows[k], static_cast<Eigen::Index>(c)));
      pos.push_back(labels[k] == cats.name(c));
    }
    const auto npos = static_cast<std::size_t>(std::count(pos.begin(), pos.end(), true));
    if (npos == 0 || npos == pos.size()) {
      report.skipped.push_back(cats.name(c));
      continue;
    }
    const double auc = roc_auc(s, pos);
    report.auc.emplace_back(cats.name(c), auc);
    auc_sum += auc;
  }
  report.mean_auc = report.auc.empty() ? 0.0 : auc_sum / static_cast<double>(report.auc.size());

  std::size_t correct = 0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (!is_novel[k]) continue;
    const auto best = argmax_first(scores.values.row(rows[k]).transpose());
    correct += cats.name(static_cast<std::size_t>(best)) == labels[k];
  }
  report.accuracy = report.novel_test_instances == 0
                        ? 0.0
                        : static_cast<double>(correct) / static_cast<double>(report.novel_test_instances);
  return report;
}

double mean_ap(const CategoryScoreMatrix& scores, const LabelMap& truth,
               std::vector<std::pair<std::string, double>>* per_category) {
  const auto& cats = scores.categories();
  if (cats.empty()) throw ValidationError("mean AP: no categories");
  std::vector<std::string> labels;
  for (const auto& inst : scores.instances().names()) {
    const auto t = truth.find(inst);
    if (t == truth.end()) throw ValidationError("mean AP: no ground truth for instance '" + inst + "'");
    labels.push_back(t->second);
  }
  double sum = 0.0;
  const auto n = labels.size();
  std::vector<bool> pos(n);
  std::vector<double> s(n);
  for (std::size_t c = 0; c < cats.size(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = scores.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      pos[i] = labels[i] == cats.name(c);
    }
    double ap = 0.0;
    try {
      ap = average_precision(s, pos);
    } catch (const ValidationError&) {
      throw ValidationError("mean AP: category '" + cats.name(c) + "' has no positives");
    }
    if (per_category) per_category->emplace_back(cats.name(c), ap);
    sum += ap;
  }
  return sum / static_cast<double>(cats.size());
}

namespace {

nlohmann::ordered_json report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["protocol"] = to_string(r.protocol);
  j["novel_test_instances"] = r.novel_test_instances;
  j["distractor_instances"] = r.distractor_instances;
  j["accuracy"] = r.accuracy;
  j["mean_auc"] = r.mean_auc;
  nlohmann::ordered_json auc = nlohmann::ordered_json::object();
  for (const auto& [c, v] : r.auc) auc[c] = v;
  j["auc"] = auc;
  if (r.has_ap) {
    j["mean_ap"] = r.mean_ap;
    nlohmann::ordered_json ap = nlohmann::ordered_json::object();
    for (const auto& [c, v] : r.average_precision) ap[c] = v;
    j["average_precision"] = ap;
  }
  j["skipped"] = r.skipped;
  return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report) { return report_json(report).dump(2) + "\n"; }

std::string reports_to_json(std::span<const EvalReport> reports) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) arr.push_back(report_json(r));
  j["reports"] = arr;
  return j.dump(2) + "\n";
}

std::string report_to_tsv(const EvalReport& report) {
  std::ostringstream out;
  out << "\tauc";
  if (report.has_ap) out << "\tap";
  out << '\n';
  for (std::size_t c = 0; c < report.auc.size(); ++c) {
    out << report.auc[c].first << '\t' << format_number(report.auc[c].second);
    if (report.has_ap) {
      for (const auto& [name, v] : report.average_precision) {
        if (name == report.auc[c].first) out << '\t' << format_number(v);
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace semtransfer
