#include "semtransfer/matrix.hpp"

#include <cmath>

#include "semtransfer/error.hpp"

namespace semtransfer {

void LabeledMatrix::check(std::string_view what) const {
  const std::string tag(what);
  if (values.rows() != static_cast<Eigen::Index>(rows.size()) ||
      values.cols() != static_cast<Eigen::Index>(cols.size())) {
    throw ValidationError(tag + ": matrix is " + std::to_string(values.rows()) + "x" +
                          std::to_string(values.cols()) + " but identifiers give " +
                          std::to_string(rows.size()) + "x" + std::to_string(cols.size()));
  }
  if (!values.allFinite()) throw ValidationError(tag + ": non-finite entry");
}

namespace {

void check_unit_interval(const LabeledMatrix& m, std::string_view what) {
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      const double v = m.values(i, j);
      if (v < 0.0 || v > 1.0) {
        throw ValidationError(std::string(what) + ": entry (" + m.rows.name(i) + ", " +
                              m.cols.name(j) + ") = " + std::to_string(v) + " outside [0,1]");
      }
    }
  }
}

}  // namespace

AssociationMatrix AssociationMatrix::create(Registry categories, Registry attributes,
                                            Eigen::MatrixXd values, bool binary) {
  AssociationMatrix m;
  m.rows = std::move(categories);
  m.cols = std::move(attributes);
  m.values = std::move(values);
  m.binary = binary;
  m.check("association matrix");
  check_unit_interval(m, "association matrix");
  if (binary) {
    for (Eigen::Index i = 0; i < m.values.size(); ++i) {
      const double v = m.values.data()[i];
      if (v != 0.0 && v != 1.0) throw ValidationError("association matrix: binary mode with entry " + std::to_string(v));
    }
  }
  return m;
}

AssociationMatrix AssociationMatrix::select_categories(const Registry& subset) const {
  Eigen::MatrixXd out(subset.size(), values.cols());
  for (std::size_t r = 0; r < subset.size(); ++r) out.row(r) = values.row(rows.index(subset.name(r)));
  return create(subset, cols, std::move(out), binary);
}

std::vector<std::string> AssociationMatrix::warnings() const {
  std::vector<std::string> out;
  if (!binary) return out;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    if ((values.row(i).array() == 0.0).all()) {
      out.push_back("category '" + rows.name(i) + "' has no associated attribute");
    }
  }
  return out;
}

AttributeScoreMatrix AttributeScoreMatrix::create(Registry instances, Registry attributes,
                                                  Eigen::MatrixXd values) {
  AttributeScoreMatrix m;
  m.rows = std::move(instances);
  m.cols = std::move(attributes);
  m.values = std::move(values);
  m.check("attribute score matrix");
  check_unit_interval(m, "attribute score matrix");
  return m;
}

FeatureMatrix FeatureMatrix::create(Registry instances, Eigen::MatrixXd values) {
  Registry dims = numbered_registry("f", static_cast<std::size_t>(values.cols()));
  return create(std::move(instances), std::move(dims), std::move(values));
}

FeatureMatrix FeatureMatrix::create(Registry instances, Registry dims, Eigen::MatrixXd values) {
  FeatureMatrix m;
  m.rows = std::move(instances);
  m.cols = std::move(dims);
  m.values = std::move(values);
  m.check("feature matrix");
  return m;
}

std::string to_string(Measure m) {
  switch (m) {
    case Measure::DiceHit: return "dice_hit";
    case Measure::DiceSnippet: return "dice_snippet";
    case Measure::Lin: return "lin";
    case Measure::Esa: return "esa";
    case Measure::Tfidf: return "tfidf";
    case Measure::Fused: return "fused";
  }
  return "fused";
}

Measure parse_measure(std::string_view name) {
  for (Measure m : {Measure::DiceHit, Measure::DiceSnippet, Measure::Lin, Measure::Esa,
                    Measure::Tfidf, Measure::Fused}) {
    if (to_string(m) == name) return m;
  }
  throw ParseError("unknown relatedness measure '" + std::string(name) + "'");
}

RelatednessMatrix RelatednessMatrix::create(Registry categories, Registry attributes,
                                            Eigen::MatrixXd values, Measure measure) {
  RelatednessMatrix m;
  m.rows = std::move(categories);
  m.cols = std::move(attributes);
  m.values = std::move(values);
  m.measure = measure;
  m.check("relatedness matrix");
  if ((m.values.array() < 0.0).any()) throw ValidationError("relatedness matrix: negative entry");
  return m;
}

CategoryScoreMatrix CategoryScoreMatrix::create(Registry instances, Registry categories,
                                                Eigen::MatrixXd values, bool normalized) {
  CategoryScoreMatrix m;
  m.rows = std::move(instances);
  m.cols = std::move(categories);
  m.values = std::move(values);
  m.normalized = normalized;
  m.check("category score matrix");
  if (normalized) {
    for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
      if (std::abs(m.values.row(i).sum() - 1.0) > 1e-9) {
        throw ValidationError("category score matrix: row '" + m.rows.name(i) + "' does not sum to 1");
      }
    }
  }
  return m;
}

CategoryScoreMatrix CategoryScoreMatrix::select_instances(const Registry& subset) const {
  Eigen::MatrixXd out(subset.size(), values.cols());
  for (std::size_t r = 0; r < subset.size(); ++r) out.row(r) = values.row(rows.index(subset.name(r)));
  return create(subset, cols, std::move(out), normalized);
}

Registry numbered_registry(std::string_view prefix, std::size_t count) {
  Registry r;
  for (std::size_t i = 0; i < count; ++i) r.add(std::string(prefix) + std::to_string(i));
  return r;
}

Eigen::Index argmax_first(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace semtransfer
