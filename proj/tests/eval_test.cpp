#include <doctest.h>

#include <cmath>

#include "semtransfer/error.hpp"
#include "semtransfer/eval.hpp"
#include "support.hpp"

using namespace semtransfer;

namespace {

// Novel z0 (i0, i1), z1 (i2, i3); known k0 distractors d0, d1.
DatasetSplit small_split() {
  DatasetSplit s;
  s.known_categories = {"k0"};
  s.novel_categories = {"z0", "z1"};
  s.train = {{"t0", "k0"}};
  s.test = {{"i0", "z0"}, {"i1", "z0"}, {"i2", "z1"}, {"i3", "z1"}, {"d0", "k0"}, {"d1", "k0"}};
  return s;
}

CategoryScoreMatrix scores(const Registry& rows, const Eigen::MatrixXd& v) {
  return CategoryScoreMatrix::create(rows, Registry{"z0", "z1"}, v);
}

}  // namespace

TEST_CASE("ROC AUC hand cases") {
  const std::vector<double> s{0.9, 0.4, 0.6, 0.1};
  CHECK(roc_auc(s, {true, false, true, false}) == 1.0);
  CHECK(roc_auc(s, {false, true, true, false}) == 0.5);
  CHECK(roc_auc(s, {false, false, true, true}) == 0.25);
  CHECK(roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, {true, false, true, false}) == 0.5);
  CHECK_THROWS_WITH_AS(roc_auc(s, {true, true, true, true}), "degenerate AUC", ValidationError);
}

TEST_CASE("AUC properties on random scores") {
  Rng rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = 2 + rng.below(40);
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = rng.normal();
      pos[i] = rng.bernoulli(0.4);
    }
    pos[0] = true;
    pos[1] = false;
    const double auc = roc_auc(s, pos);
    CHECK(auc >= 0.0);
    CHECK(auc <= 1.0);
    std::vector<double> neg(n), mono(n);
    for (std::size_t i = 0; i < n; ++i) {
      neg[i] = -s[i];
      mono[i] = std::exp(3.0 * s[i]) + 7.0;
    }
    CHECK(auc + roc_auc(neg, pos) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(roc_auc(mono, pos) == auc);
    CHECK(average_precision(mono, pos) == average_precision(s, pos));
  }
}

TEST_CASE("average precision hand cases") {
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.1}, {true, true, false}) == 1.0);
  CHECK(average_precision(std::vector<double>{0.9, 0.8, 0.3, 0.1}, {false, true, false, false}) == 0.5);
  CHECK_THROWS_AS(average_precision(std::vector<double>{0.1}, {false}), ValidationError);

  const Registry rows{"a", "b", "c", "d"};
  Eigen::MatrixXd v(4, 2);
  v << 0.9, 0.9, 0.1, 0.8, 0.2, 0.3, 0.3, 0.1;
  const LabelMap truth{{"a", "z0"}, {"b", "z1"}, {"c", "z0"}, {"d", "z1"}};
  // z0: a first, then d (neg), c (pos) at rank 3 -> (1 + 2/3) / 2; z1: a (neg), b (pos) at 2, c, d at 4 -> (1/2 + 2/4) / 2.
  std::vector<std::pair<std::string, double>> per;
  const double m = mean_ap(scores(rows, v), truth, &per);
  CHECK(per[0].second == doctest::Approx((1.0 + 2.0 / 3.0) / 2.0));
  CHECK(per[1].second == doctest::Approx(0.5));
  CHECK(m == doctest::Approx(((1.0 + 2.0 / 3.0) / 2.0 + 0.5) / 2.0));

  Eigen::MatrixXd w(2, 2);
  w << 0.9, 0.3, 0.8, 0.2;
  // z0 ranks its single positive first (AP 1); z1's positive is ranked second (AP 0.5).
  CHECK(mean_ap(scores(Registry{"p", "q"}, w), {{"p", "z0"}, {"q", "z1"}}) == 0.75);
  CHECK_THROWS_AS(mean_ap(scores(Registry{"p", "q"}, w), {{"p", "z0"}, {"q", "z0"}}), ValidationError);
  CHECK_THROWS_AS(mean_ap(scores(Registry{"p", "q"}, w), {{"p", "z0"}}), ValidationError);
}

TEST_CASE("zero-shot evaluation under both protocols") {
  const auto split = small_split();
  const Registry rows{"i0", "i1", "i2", "i3", "d0", "d1"};
  Eigen::MatrixXd v(6, 2);
  v << 0.9, 0.1, 0.8, 0.2, 0.3, 0.7, 0.2, 0.8, 0.1, 0.1, 0.2, 0.3;
  const auto novel = evaluate_zero_shot(scores(rows, v), split.test, split, Protocol::NovelOnly);
  CHECK(novel.mean_auc == 1.0);
  CHECK(novel.accuracy == 1.0);
  CHECK(novel.novel_test_instances == 4);
  CHECK(novel.distractor_instances == 0);
  const auto with = evaluate_zero_shot(scores(rows, v), split.test, split, Protocol::WithDistractors);
  CHECK(with.mean_auc == 1.0);
  CHECK(with.distractor_instances == 2);
  CHECK(with.accuracy == novel.accuracy);

  // Distractors that outscore every positive.
  v.bottomRows(2).setConstant(0.95);
  const auto adversarial = evaluate_zero_shot(scores(rows, v), split.test, split, Protocol::WithDistractors);
  CHECK(adversarial.mean_auc < novel.mean_auc);
  for (std::size_t c = 0; c < 2; ++c) CHECK(adversarial.auc[c].second < novel.auc[c].second);
  double mean = 0.0;
  for (const auto& [name, auc] : adversarial.auc) mean += auc / 2.0;
  CHECK(std::abs(mean - adversarial.mean_auc) <= 1e-12);
}

TEST_CASE("without distractors both protocols agree exactly") {
  auto split = small_split();
  split.test.erase("d0");
  split.test.erase("d1");
  Rng rng(31);
  const Registry rows{"i0", "i1", "i2", "i3"};
  const auto s = scores(rows, testing::uniform_matrix(rng, 4, 2));
  auto a = evaluate_zero_shot(s, split.test, split, Protocol::NovelOnly);
  auto b = evaluate_zero_shot(s, split.test, split, Protocol::WithDistractors);
  b.protocol = a.protocol;
  CHECK(a == b);
}

TEST_CASE("constant predictor on a balanced set is at chance") {
  const auto split = small_split();
  const Registry rows{"i0", "i1", "i2", "i3"};
  const auto r = evaluate_zero_shot(scores(rows, Eigen::MatrixXd::Constant(4, 2, 0.5)), split.test, split,
                                    Protocol::NovelOnly);
  CHECK(r.accuracy == 0.5);
  CHECK(r.mean_auc == 0.5);
}

TEST_CASE("evaluation input errors") {
  const auto split = small_split();
  const auto s = scores(Registry{"i0", "i1"}, Eigen::MatrixXd::Constant(2, 2, 0.5));
  CHECK_THROWS_AS(evaluate_zero_shot(s, split.test, split, Protocol::NovelOnly), ValidationError);
  CHECK(parse_protocol("with_distractors") == Protocol::WithDistractors);
  CHECK_THROWS_AS(parse_protocol("all"), ParseError);
}

TEST_CASE("report serialization") {
  const auto split = small_split();
  const Registry rows{"i0", "i1", "i2", "i3", "d0", "d1"};
  Eigen::MatrixXd v(6, 2);
  v << 0.9, 0.1, 0.8, 0.2, 0.3, 0.7, 0.2, 0.8, 0.1, 0.1, 0.2, 0.3;
  const auto r = evaluate_zero_shot(scores(rows, v), split.test, split, Protocol::WithDistractors);
  const auto json = report_to_json(r);
  CHECK(json.find("\"protocol\": \"with_distractors\"") != std::string::npos);
  CHECK(report_to_tsv(r).rfind("\tauc\n", 0) == 0);
  const std::vector<EvalReport> both{r, r};
  CHECK(reports_to_json(both).find("\"reports\"") != std::string::npos);
}
