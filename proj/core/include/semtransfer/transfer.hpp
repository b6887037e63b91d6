#pragma once

#include <string_view>

#include "semtransfer/matrix.hpp"
#include "semtransfer/taxonomy.hpp"

namespace semtransfer {

/// Per-attribute prior p(a_m), strictly inside (0,1).
struct AttributePrior {
  Registry attributes;
  Eigen::VectorXd values;

  static AttributePrior uniform(const Registry& attributes, double p = 0.5);
  /// Mean association over known categories clamped to [0.05, 0.95]; a mean
  /// of exactly 0 or 1 falls back to 0.5.
  static AttributePrior empirical(const AssociationMatrix& known_assoc);
  void check() const;
};

/// Direct attribute prediction, in the log domain:
///   sum_m a_m^z log(p(a_m|x)/p(a_m)) + (1 - a_m^z) log((1-p(a_m|x))/(1-p(a_m)))
/// Attribute scores are clamped to [1e-9, 1-1e-9]. Attributes are matched by
/// id, so `scores` and `prior` may list them in any order.
CategoryScoreMatrix dap_scores(const AttributeScoreMatrix& scores, const AssociationMatrix& novel_assoc,
                               const AttributePrior& prior);

/// Row-wise softmax of log-domain scores. Keeps each row's argmax and yields
/// a normalized matrix usable as propagation seeds.
CategoryScoreMatrix softmax_rows(const CategoryScoreMatrix& log_scores);

/// score(i, z) = sum over the top_k known categories most related to z of
/// normalized relatedness times known_scores(i, y). `rel` is novel x known.
/// Throws ValidationError("unrelatable novel category ...") when a row of
/// `rel` is all zero.
CategoryScoreMatrix direct_similarity_scores(const CategoryScoreMatrix& known_scores, const RelatednessMatrix& rel,
                                             std::size_t top_k);

enum class HierarchyMode { Leaf, Inner, All };

HierarchyMode parse_hierarchy_mode(std::string_view name);

/// Transfers known-category scores to novel taxonomy leaves.
///  - Leaf: score of the nearest known category by tree distance.
///  - Inner: mean over known categories below the novel leaf's parent,
///    moving up until at least one is found.
///  - All: mean of the two.
CategoryScoreMatrix hierarchy_transfer(const Taxonomy& tax, const CategoryScoreMatrix& known_scores,
                                       const Registry& novel_leaves, HierarchyMode mode);

}  // namespace semtransfer
