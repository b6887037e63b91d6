#include "semtransfer/association.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <set>

#include "semtransfer/error.hpp"
#include "semtransfer/text.hpp"

namespace semtransfer {

RelatednessMatrix compute_relatedness(Measure measure, const RelatednessSources& sources,
                                      const Registry& categories, const Registry& attributes) {
  const bool needs_corpus = measure == Measure::DiceHit || measure == Measure::DiceSnippet || measure == Measure::Esa;
  if (needs_corpus && sources.corpus == nullptr) {
    throw ValidationError(to_string(measure) + " measure requires a corpus");
  }
  if (measure == Measure::Lin && (sources.taxonomy == nullptr || !sources.taxonomy->has_probabilities())) {
    throw ValidationError("lin measure requires a taxonomy with node probabilities");
  }
  if (measure == Measure::Tfidf || measure == Measure::Fused) {
    throw ValidationError(to_string(measure) + " is not a pairwise measure");
  }
  Eigen::MatrixXd v(categories.size(), attributes.size());
  for (std::size_t i = 0; i < categories.size(); ++i) {
    for (std::size_t j = 0; j < attributes.size(); ++j) {
      const auto& c = categories.name(i);
      const auto& a = attributes.name(j);
      switch (measure) {
        case Measure::DiceHit: v(i, j) = dice_hitcount(*sources.corpus, c, a); break;
        case Measure::DiceSnippet: v(i, j) = dice_snippet(*sources.corpus, sources.window, c, a); break;
        case Measure::Esa: v(i, j) = esa_relatedness(*sources.corpus, c, a); break;
        case Measure::Lin: v(i, j) = lin_relatedness(*sources.taxonomy, c, a); break;
        default: break;
      }
    }
  }
  return RelatednessMatrix::create(categories, attributes, std::move(v), measure);
}

namespace {

std::size_t count_phrase(const std::vector<std::string>& doc, const std::vector<std::string>& phrase) {
  if (phrase.empty() || doc.size() < phrase.size()) return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i + phrase.size() <= doc.size(); ++i) {
    if (std::equal(phrase.begin(), phrase.end(), doc.begin() + static_cast<std::ptrdiff_t>(i))) ++n;
  }
  return n;
}

}  // namespace

RelatednessMatrix tfidf_associations(std::span<const ScriptCollection> scripts, const Registry& attributes) {
  if (attributes.empty()) throw ValidationError("tfidf: empty attribute vocabulary");
  if (scripts.empty()) throw ValidationError("tfidf: no composite categories");
  Registry composites;
  for (const auto& s : scripts) {
    if (s.documents.empty()) throw ValidationError("tfidf: composite '" + s.category + "' has no documents");
    composites.add(s.category);
  }
  std::vector<std::vector<std::string>> phrases;
  for (const auto& a : attributes.names()) phrases.push_back(tokenize(a));

  const auto C = scripts.size();
  const auto M = attributes.size();
  Eigen::MatrixXd tf = Eigen::MatrixXd::Zero(C, M);
  std::vector<std::size_t> df(M, 0);
  for (std::size_t y = 0; y < C; ++y) {
    std::size_t total_tokens = 0;
    std::vector<std::size_t> counts(M, 0);
    for (const auto& text : scripts[y].documents) {
      const auto toks = tokenize(text);
      total_tokens += toks.size();
      for (std::size_t m = 0; m < M; ++m) counts[m] += count_phrase(toks, phrases[m]);
    }
    for (std::size_t m = 0; m < M; ++m) {
      if (counts[m] > 0) ++df[m];
      if (total_tokens > 0) tf(y, m) = static_cast<double>(counts[m]) / static_cast<double>(total_tokens);
    }
  }
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(C, M);
  for (std::size_t m = 0; m < M; ++m) {
    if (df[m] == 0) continue;
    const double idf = std::log(static_cast<double>(C) / static_cast<double>(df[m]));
    v.col(m) = tf.col(m) * idf;
  }
  return RelatednessMatrix::create(std::move(composites), attributes, std::move(v), Measure::Tfidf);
}

std::vector<ScriptCollection> group_scripts(std::span<const Document> docs) {
  std::vector<ScriptCollection> out;
  for (const auto& d : docs) {
    if (d.group.empty()) throw ValidationError("script document '" + d.id + "' has no category");
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& s) { return s.category == d.group; });
    if (it == out.end()) {
      out.push_back({d.group, {}});
      it = std::prev(out.end());
    }
    it->documents.push_back(d.text);
  }
  return out;
}

FusionMode parse_fusion_mode(std::string_view name) {
  if (name == "classifier_fusion") return FusionMode::ClassifierFusion;
  if (name == "expanded") return FusionMode::Expanded;
  throw ParseError("unknown fusion mode '" + std::string(name) + "'");
}

Eigen::MatrixXd min_max_normalize(const Eigen::MatrixXd& values) {
  if (values.size() == 0) return values;
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (hi == lo) return Eigen::MatrixXd::Zero(values.rows(), values.cols());
  return (values.array() - lo) / (hi - lo);
}

RelatednessMatrix fuse_measures(std::span<const RelatednessMatrix> matrices, FusionMode mode) {
  if (matrices.empty()) throw ValidationError("fusion: no input matrices");
  const auto& first = matrices.front();
  for (const auto& m : matrices) {
    if (!(m.categories() == first.categories())) throw ValidationError("fusion: category lists differ");
  }
  if (mode == FusionMode::ClassifierFusion) {
    for (const auto& m : matrices) {
      if (!(m.attributes() == first.attributes())) {
        throw ValidationError("fusion: classifier fusion requires identical attribute lists");
      }
    }
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(first.values.rows(), first.values.cols());
    for (const auto& m : matrices) sum += min_max_normalize(m.values);
    sum /= static_cast<double>(matrices.size());
    return RelatednessMatrix::create(first.categories(), first.attributes(), std::move(sum), Measure::Fused);
  }

  std::set<std::string> tags;
  bool repeated = false;
  for (const auto& m : matrices) repeated |= !tags.insert(to_string(m.measure)).second;
  Registry attrs;
  Eigen::Index total = 0;
  for (const auto& m : matrices) total += m.values.cols();
  Eigen::MatrixXd out(first.values.rows(), total);
  Eigen::Index col = 0;
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    const auto& m = matrices[k];
    std::string tag = to_string(m.measure);
    if (repeated) tag += std::to_string(k);
    for (const auto& a : m.attributes().names()) attrs.add(tag + ":" + a);
    out.middleCols(col, m.values.cols()) = min_max_normalize(m.values);
    col += m.values.cols();
  }
  return RelatednessMatrix::create(first.categories(), std::move(attrs), std::move(out), Measure::Fused);
}

BinarizePolicy BinarizePolicy::parse(std::string_view spec) {
  auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ParseError("bad binarize policy '" + std::string(spec) + "'");
    }
    return v;
  };
  if (spec == "mean") return per_attribute_mean();
  if (spec.starts_with("topk:")) {
    const double k = number(spec.substr(5));
    if (k < 1 || k != std::floor(k)) throw ValidationError("topk requires an integer k >= 1");
    return top_k(static_cast<std::size_t>(k));
  }
  if (spec.starts_with("threshold:")) return global_threshold(number(spec.substr(10)));
  throw ParseError("bad binarize policy '" + std::string(spec) + "'");
}

AssociationMatrix binarize(const RelatednessMatrix& rel, const BinarizePolicy& policy) {
  const auto& v = rel.values;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(v.rows(), v.cols());
  switch (policy.kind) {
    case BinarizePolicy::Kind::PerAttributeTopK: {
      if (policy.k < 1) throw ValidationError("topk requires k >= 1");
      const auto take = std::min<std::size_t>(policy.k, static_cast<std::size_t>(v.rows()));
      std::vector<Eigen::Index> order(static_cast<std::size_t>(v.rows()));
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v(a, j) > v(b, j); });
        for (std::size_t r = 0; r < take; ++r) out(order[r], j) = 1.0;
      }
      break;
    }
    case BinarizePolicy::Kind::GlobalThreshold:
      if (!std::isfinite(policy.threshold)) throw ValidationError("threshold must be finite");
      out = (v.array() >= policy.threshold).cast<double>();
      break;
    case BinarizePolicy::Kind::PerAttributeMean:
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        const double mean = v.col(j).mean();
        out.col(j) = (v.col(j).array() > mean).cast<double>();
      }
      break;
  }
  return AssociationMatrix::create(rel.categories(), rel.attributes(), std::move(out), true);
}

}  // namespace semtransfer
