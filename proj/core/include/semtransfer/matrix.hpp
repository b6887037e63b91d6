#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>
#include <vector>

#include "semtransfer/registry.hpp"

namespace semtransfer {

/// Dense matrix whose rows and columns are addressed by identifier.
struct LabeledMatrix {
  Registry rows;
  Registry cols;
  Eigen::MatrixXd values;

  double at(std::string_view row, std::string_view col) const {
    return values(rows.index(row), cols.index(col));
  }
  /// Throws ValidationError on shape mismatch or non-finite entries.
  void check(std::string_view what) const;

  bool operator==(const LabeledMatrix&) const = default;
};

/// Category x attribute associations a_m^y. Binary mode restricts entries to {0,1}.
struct AssociationMatrix : LabeledMatrix {
  bool binary = true;

  static AssociationMatrix create(Registry categories, Registry attributes, Eigen::MatrixXd values,
                                  bool binary);
  const Registry& categories() const { return rows; }
  const Registry& attributes() const { return cols; }

  /// Rows restricted to `subset`, in the subset's order.
  AssociationMatrix select_categories(const Registry& subset) const;
  /// Non-fatal diagnostics, e.g. binary rows with no associated attribute.
  std::vector<std::string> warnings() const;
};

/// Instance x attribute probabilities p(a_m | x_i).
struct AttributeScoreMatrix : LabeledMatrix {
  static AttributeScoreMatrix create(Registry instances, Registry attributes, Eigen::MatrixXd values);
  const Registry& instances() const { return rows; }
  const Registry& attributes() const { return cols; }
};

/// Instance x feature matrix. Columns are named f0..f{d-1} unless given.
struct FeatureMatrix : LabeledMatrix {
  static FeatureMatrix create(Registry instances, Eigen::MatrixXd values);
  static FeatureMatrix create(Registry instances, Registry dims, Eigen::MatrixXd values);
  const Registry& instances() const { return rows; }
  Eigen::Index dim() const { return values.cols(); }
};

enum class Measure { DiceHit, DiceSnippet, Lin, Esa, Tfidf, Fused };

std::string to_string(Measure m);
/// Throws ParseError for unknown names.
Measure parse_measure(std::string_view name);

/// Real-valued category x attribute relatedness produced by one measure.
struct RelatednessMatrix : LabeledMatrix {
  Measure measure = Measure::Fused;

  static RelatednessMatrix create(Registry categories, Registry attributes, Eigen::MatrixXd values,
                                  Measure measure);
  const Registry& categories() const { return rows; }
  const Registry& attributes() const { return cols; }
};

/// Instance x category scores. When `normalized` is set every row sums to 1.
struct CategoryScoreMatrix : LabeledMatrix {
  bool normalized = false;

  static CategoryScoreMatrix create(Registry instances, Registry categories, Eigen::MatrixXd values,
                                    bool normalized = false);
  const Registry& instances() const { return rows; }
  const Registry& categories() const { return cols; }

  CategoryScoreMatrix select_instances(const Registry& subset) const;
};

Registry numbered_registry(std::string_view prefix, std::size_t count);

/// Index of the largest entry; ties resolve to the lowest index.
Eigen::Index argmax_first(const Eigen::Ref<const Eigen::VectorXd>& v);

}  // namespace semtransfer
