#include <doctest.h>

#include <cmath>

#include "semtransfer/association.hpp"
#include "semtransfer/corpus.hpp"
#include "semtransfer/error.hpp"
#include "semtransfer/taxonomy.hpp"
#include "semtransfer/text.hpp"
#include "support.hpp"

using namespace semtransfer;

namespace {

std::vector<Document> docs_from(std::initializer_list<std::string> texts) {
  std::vector<Document> d;
  for (const auto& t : texts) d.push_back({"d" + std::to_string(d.size()), t, ""});
  return d;
}

// zebra in docs 1-4, striped in docs 2-6 (1-based), ten documents in all.
std::vector<Document> zebra_corpus() {
  return docs_from({"zebra grass", "zebra striped", "Zebra, striped!", "striped zebra savanna", "striped shirt",
                    "striped flag", "horse", "lion", "grass", "savanna"});
}

Taxonomy animal_taxonomy() {
  return Taxonomy::build({{"animal", "root"}, {"horse", "animal"}, {"zebra", "animal"}, {"rock", "root"}},
                         {{"root", 1.0}, {"animal", 0.5}, {"horse", 0.25}, {"zebra", 0.25}, {"rock", 0.5}});
}

std::vector<Document> random_corpus(Rng& rng, std::size_t docs, std::size_t vocab) {
  std::vector<Document> out;
  for (std::size_t d = 0; d < docs; ++d) {
    std::string text;
    const auto len = 1 + rng.below(12);
    for (std::size_t t = 0; t < len; ++t) text += "w" + std::to_string(rng.below(vocab)) + " ";
    out.push_back({"doc" + std::to_string(d), text, ""});
  }
  return out;
}

}  // namespace

TEST_CASE("tokenizer splits on unicode whitespace and trims ASCII punctuation") {
  CHECK(tokenize("Zebra, (striped)!  horse") == std::vector<std::string>{"zebra", "striped", "horse"});
  CHECK(tokenize("a b c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("... -- !!") .empty());
  CHECK(tokenize("don't") == std::vector<std::string>{"don't"});
  CHECK(tokenize("ÉTÉ Café") == std::vector<std::string>{"ÉtÉ", "café"});
}

TEST_CASE("corpus index document frequencies") {
  const auto docs = docs_from({"zebra grass", "zebra zebra", "horse"});
  const auto index = CorpusIndex::build(docs);
  CHECK(index.doc_count() == 3);
  CHECK(index.document_frequency("zebra") == 2);
  CHECK(index.document_frequency("ZEBRA") == 2);
  CHECK(index.document_frequency("okapi") == 0);
  CHECK(index.document_frequency("zebra grass") == 1);
  CHECK_THROWS_WITH_AS(CorpusIndex::build(std::vector<Document>{}), "empty corpus", ValidationError);
  auto dup = docs;
  dup[2].id = dup[0].id;
  CHECK_THROWS_AS(CorpusIndex::build(dup), ValidationError);
}

TEST_CASE("dice hit count") {
  const auto docs = zebra_corpus();
  const auto index = CorpusIndex::build(docs);
  CHECK(dice_hitcount(index, "zebra", "striped") == doctest::Approx(0.66666666666666663).epsilon(1e-15));
  CHECK(dice_hitcount(index, "zebra", "zebra") == 1.0);
  CHECK(dice_hitcount(index, "zebra", "okapi") == 0.0);
  CHECK(dice_hitcount(index, "okapi", "okapi") == 0.0);
}

TEST_CASE("dice over snippet windows") {
  const auto index = CorpusIndex::build(docs_from({"a b c a"}));
  CHECK(dice_snippet(index, 2, "a", "b") == 0.5);
  CHECK(dice_snippet(index, 1, "a", "b") == 0.0);
  CHECK(dice_snippet(index, 10, "a", "b") == 1.0);
  CHECK_THROWS_AS(dice_snippet(index, 0, "a", "b"), ValidationError);
  const auto z = CorpusIndex::build(zebra_corpus());
  CHECK(dice_snippet(z, kUnboundedWindow, "zebra", "striped") == dice_hitcount(z, "zebra", "striped"));
}

TEST_CASE("lin similarity on a small taxonomy") {
  const auto tax = animal_taxonomy();
  CHECK(std::abs(lin_relatedness(tax, "horse", "zebra") - 0.5) <= 1e-12);
  CHECK(lin_relatedness(tax, "zebra", "zebra") == 1.0);
  CHECK(lin_relatedness(tax, "zebra", "rock") == 0.0);
  CHECK_THROWS_AS(lin_relatedness(tax, "zebra", "okapi"), ValidationError);
  const auto bare = Taxonomy::build({{"a", "r"}});
  CHECK_THROWS_AS(lin_relatedness(bare, "a", "a"), ValidationError);
}

TEST_CASE("taxonomy validation") {
  CHECK_THROWS_AS(Taxonomy::build({{"a", "b"}, {"b", "a"}}), ValidationError);
  CHECK_THROWS_AS(Taxonomy::build({{"a", "r"}, {"b", "s"}}), ValidationError);
  CHECK_THROWS_AS(Taxonomy::build({{"a", "r"}, {"a", "s"}, {"s", "r"}}), ValidationError);
  CHECK_THROWS_AS(Taxonomy::build({{"a", "r"}}, {{"r", 0.9}, {"a", 0.5}}), ValidationError);
  CHECK_THROWS_AS(Taxonomy::build({{"a", "r"}}, {{"r", 1.0}, {"a", 0.0}}), ValidationError);
  CHECK_THROWS_AS(Taxonomy::build({{"a", "m"}, {"m", "r"}}, {{"r", 1.0}, {"m", 0.3}, {"a", 0.4}}), ValidationError);
  const auto t = animal_taxonomy();
  CHECK(t.distance(t.nodes().index("horse"), t.nodes().index("rock")) == 3);
  CHECK(t.nodes().name(t.lcs(t.nodes().index("horse"), t.nodes().index("zebra"))) == "animal");
}

TEST_CASE("ESA relatedness") {
  // Concept vectors over d0 = "a a c x", d1 = "b x"; x has idf 0.
  const auto index = CorpusIndex::build(docs_from({"a a c x", "b x"}));
  CHECK(esa_relatedness(index, "a b", "c") == doctest::Approx(0.89442719099991597).epsilon(1e-14));
  CHECK(esa_relatedness(index, "a", "a") == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(esa_relatedness(index, "a", "b") == 0.0);
  CHECK(esa_relatedness(index, "x", "a") == 0.0);
  CHECK(esa_relatedness(index, "okapi", "a") == 0.0);
}

TEST_CASE("tfidf associations from script documents") {
  std::vector<ScriptCollection> scripts{
      {"omelet", {"crack egg whisk egg pan heat", "serve plate fork knife"}},
      {"salad", {"wash lettuce cut tomato", "mix bowl"}},
  };
  const Registry vocab{"egg", "bowl", "plate", "okapi"};
  const auto m = tfidf_associations(scripts, vocab);
  CHECK(m.at("omelet", "egg") == doctest::Approx(0.13862943611198905).epsilon(1e-14));
  CHECK(m.at("salad", "egg") == 0.0);
  CHECK(m.at("omelet", "okapi") == 0.0);
  CHECK(m.at("salad", "okapi") == 0.0);

  scripts[1].documents.push_back("egg plate");
  const auto flat = tfidf_associations(scripts, vocab);
  CHECK(flat.at("omelet", "egg") == 0.0);
  CHECK(flat.at("salad", "egg") == 0.0);

  std::vector<ScriptCollection> empty{{"x", {}}};
  CHECK_THROWS_AS(tfidf_associations(empty, vocab), ValidationError);
}

TEST_CASE("tfidf is invariant to duplicating every document") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<ScriptCollection> scripts;
    for (int c = 0; c < 4; ++c) {
      ScriptCollection s{"comp" + std::to_string(c), {}};
      for (const auto& d : random_corpus(rng, 1 + rng.below(4), 15)) s.documents.push_back(d.text);
      scripts.push_back(std::move(s));
    }
    auto doubled = scripts;
    for (auto& s : doubled) {
      const auto n = s.documents.size();
      for (std::size_t i = 0; i < n; ++i) s.documents.push_back(s.documents[i]);
    }
    const auto vocab = numbered_registry("w", 15);
    const auto a = tfidf_associations(scripts, vocab);
    const auto b = tfidf_associations(doubled, vocab);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(a.values.minCoeff() >= 0.0);
  }
}

TEST_CASE("measures are symmetric, bounded, and unbounded snippets equal hit counts") {
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    const auto docs = random_corpus(rng, 30, 12);
    const auto index = CorpusIndex::build(docs);
    for (int pair = 0; pair < 40; ++pair) {
      const auto a = "w" + std::to_string(rng.below(14));
      const auto b = "w" + std::to_string(rng.below(14));
      const std::size_t window = 1 + rng.below(5);
      const double h = dice_hitcount(index, a, b);
      CHECK(h == dice_hitcount(index, b, a));
      CHECK(dice_snippet(index, window, a, b) == dice_snippet(index, window, b, a));
      CHECK(esa_relatedness(index, a, b) == esa_relatedness(index, b, a));
      CHECK(dice_snippet(index, kUnboundedWindow, a, b) == h);
      for (double v : {h, dice_snippet(index, window, a, b), esa_relatedness(index, a, b)}) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      if (index.document_frequency(a) > 0) CHECK(esa_relatedness(index, a, a) == doctest::Approx(1.0));
    }
  }
  const auto tax = animal_taxonomy();
  for (const auto& x : tax.nodes().names()) {
    for (const auto& y : tax.nodes().names()) {
      if (x == "root" || y == "root") continue;
      const double v = lin_relatedness(tax, x, y);
      CHECK(v == lin_relatedness(tax, y, x));
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("compute_relatedness reports missing resources") {
  const Registry cats{"zebra"};
  const Registry attrs{"striped"};
  CHECK_THROWS_AS(compute_relatedness(Measure::DiceHit, {}, cats, attrs), ValidationError);
  CHECK_THROWS_WITH_AS(compute_relatedness(Measure::Lin, {}, cats, attrs),
                       "lin measure requires a taxonomy with node probabilities", ValidationError);
  const auto index = CorpusIndex::build(zebra_corpus());
  RelatednessSources src;
  src.corpus = &index;
  const auto m = compute_relatedness(Measure::DiceHit, src, cats, attrs);
  CHECK(m.measure == Measure::DiceHit);
  CHECK(m.at("zebra", "striped") == dice_hitcount(index, "zebra", "striped"));
}

TEST_CASE("fusion") {
  Eigen::MatrixXd a(2, 2), b(2, 2);
  a << 0, 1, 2, 3;
  b << 5, 5, 5, 10;
  const Registry cats{"c0", "c1"};
  const Registry attrs{"x", "y"};
  const std::vector<RelatednessMatrix> two{RelatednessMatrix::create(cats, attrs, a, Measure::DiceHit),
                                           RelatednessMatrix::create(cats, attrs, b, Measure::Esa)};

  const auto single = fuse_measures(std::span(two).first(1), FusionMode::ClassifierFusion);
  CHECK(single.values.isApprox(a / 3.0));
  CHECK(fuse_measures(std::span(two).first(1), FusionMode::Expanded).values.isApprox(a / 3.0));

  const auto mean = fuse_measures(two, FusionMode::ClassifierFusion);
  Eigen::MatrixXd expected(2, 2);
  expected << 0, 0.16666666666666666, 0.33333333333333331, 1;
  CHECK((mean.values - expected).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK(mean.measure == Measure::Fused);

  const auto wide = fuse_measures(two, FusionMode::Expanded);
  CHECK(wide.values.cols() == 4);
  CHECK(wide.attributes().names() == std::vector<std::string>{"dice_hit:x", "dice_hit:y", "esa:x", "esa:y"});

  const std::vector<RelatednessMatrix> mismatched{two[0],
                                                  RelatednessMatrix::create(Registry{"c0", "c2"}, attrs, b, Measure::Esa)};
  CHECK_THROWS_AS(fuse_measures(mismatched, FusionMode::Expanded), ValidationError);
  CHECK_THROWS_AS(fuse_measures(mismatched, FusionMode::ClassifierFusion), ValidationError);
  CHECK(min_max_normalize(Eigen::MatrixXd::Constant(2, 2, 3.0)).isZero());
}

TEST_CASE("binarize policies") {
  const Registry cats{"c0", "c1", "c2"};
  Eigen::MatrixXd v(3, 2);
  v << 0.2, 0.0, 0.9, 1.0, 0.9, 0.5;
  const auto rel = RelatednessMatrix::create(cats, Registry{"x", "y"}, v, Measure::Esa);

  const auto top1 = binarize(rel, BinarizePolicy::top_k(1));
  CHECK(top1.values.col(0) == Eigen::Vector3d(0, 1, 0));
  CHECK(top1.binary);
  CHECK(binarize(rel, BinarizePolicy::top_k(7)).values.isOnes());
  CHECK(binarize(rel, BinarizePolicy::global_threshold(-1.0)).values.isOnes());
  CHECK(binarize(rel, BinarizePolicy::global_threshold(0.9)).values.col(0) == Eigen::Vector3d(0, 1, 1));

  Eigen::MatrixXd two(2, 1);
  two << 0, 1;
  const auto m = binarize(RelatednessMatrix::create(Registry{"a", "b"}, Registry{"x"}, two, Measure::Esa),
                          BinarizePolicy::per_attribute_mean());
  CHECK(m.values == two);

  CHECK(BinarizePolicy::parse("topk:3").k == 3);
  CHECK(BinarizePolicy::parse("threshold:0.25").threshold == 0.25);
  CHECK(BinarizePolicy::parse("mean").kind == BinarizePolicy::Kind::PerAttributeMean);
  CHECK_THROWS_AS(BinarizePolicy::parse("topk:0"), ValidationError);
  CHECK_THROWS_AS(BinarizePolicy::parse("median"), ParseError);

  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto n = 1 + rng.below(8);
    const auto k = 1 + rng.below(10);
    Eigen::MatrixXd r = testing::uniform_matrix(rng, static_cast<Eigen::Index>(n), 4);
    for (Eigen::Index i = 0; i < r.size(); ++i) r(i) = std::round(r(i) * 3.0);  // force ties
    const auto b = binarize(RelatednessMatrix::create(numbered_registry("c", n), numbered_registry("a", 4), r,
                                                      Measure::Esa),
                            BinarizePolicy::top_k(k));
    for (Eigen::Index c = 0; c < 4; ++c) CHECK(b.values.col(c).sum() == static_cast<double>(std::min(k, n)));
  }
}
