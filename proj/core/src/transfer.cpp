#include "semtransfer/transfer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "semtransfer/error.hpp"

namespace semtransfer {

AttributePrior AttributePrior::uniform(const Registry& attributes, double p) {
  AttributePrior prior{attributes, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(attributes.size()), p)};
  prior.check();
  return prior;
}

AttributePrior AttributePrior::empirical(const AssociationMatrix& known_assoc) {
  AttributePrior prior{known_assoc.attributes(), Eigen::VectorXd(known_assoc.values.cols())};
  for (Eigen::Index m = 0; m < known_assoc.values.cols(); ++m) {
    const double mean = known_assoc.values.rows() > 0 ? known_assoc.values.col(m).mean() : 0.0;
    prior.values[m] = (mean <= 0.0 || mean >= 1.0) ? 0.5 : std::clamp(mean, 0.05, 0.95);
  }
  return prior;
}

void AttributePrior::check() const {
  if (values.size() != static_cast<Eigen::Index>(attributes.size())) {
    throw ValidationError("attribute prior: size does not match attribute list");
  }
  for (Eigen::Index m = 0; m < values.size(); ++m) {
    if (!(values[m] > 0.0 && values[m] < 1.0)) {
      throw ValidationError("attribute prior for '" + attributes.name(m) + "' outside (0,1)");
    }
  }
}

CategoryScoreMatrix dap_scores(const AttributeScoreMatrix& scores, const AssociationMatrix& novel_assoc,
                               const AttributePrior& prior) {
  if (!novel_assoc.binary) throw ValidationError("DAP requires binary associations");
  prior.check();
  const auto m_count = static_cast<Eigen::Index>(novel_assoc.attributes().size());
  std::vector<Eigen::Index> score_col(m_count), prior_idx(m_count);
  for (Eigen::Index m = 0; m < m_count; ++m) {
    const auto& name = novel_assoc.attributes().name(m);
    const auto s = scores.attributes().find(name);
    const auto p = prior.attributes.find(name);
    if (!s) throw ValidationError("DAP: attribute '" + name + "' has no classifier scores");
    if (!p) throw ValidationError("DAP: attribute '" + name + "' has no prior");
    score_col[m] = static_cast<Eigen::Index>(*s);
    prior_idx[m] = static_cast<Eigen::Index>(*p);
  }

  constexpr double eps = 1e-9;
  const Eigen::Index n = scores.values.rows();
  const Eigen::Index z_count = novel_assoc.values.rows();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, z_count);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index z = 0; z < z_count; ++z) {
      double acc = 0.0;
      for (Eigen::Index m = 0; m < m_count; ++m) {
        const double p = std::clamp(scores.values(i, score_col[m]), eps, 1.0 - eps);
        const double pr = prior.values[prior_idx[m]];
        if (novel_assoc.values(z, m) == 1.0) {
          acc += std::log(p) - std::log(pr);
        } else {
          acc += std::log(1.0 - p) - std::log(1.0 - pr);
        }
      }
      out(i, z) = acc;
    }
  }
  return CategoryScoreMatrix::create(scores.instances(), novel_assoc.categories(), std::move(out), false);
}

CategoryScoreMatrix softmax_rows(const CategoryScoreMatrix& log_scores) {
  Eigen::MatrixXd p(log_scores.values.rows(), log_scores.values.cols());
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double top = log_scores.values.row(i).maxCoeff();
    p.row(i) = (log_scores.values.row(i).array() - top).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return CategoryScoreMatrix::create(log_scores.instances(), log_scores.categories(), std::move(p), true);
}

CategoryScoreMatrix direct_similarity_scores(const CategoryScoreMatrix& known_scores, const RelatednessMatrix& rel,
                                             std::size_t top_k) {
  if (top_k < 1) throw ValidationError("direct similarity: top_k must be at least 1");
  const auto& known = rel.attributes();
  std::vector<Eigen::Index> score_col(known.size());
  for (std::size_t y = 0; y < known.size(); ++y) {
    const auto c = known_scores.categories().find(known.name(y));
    if (!c) throw ValidationError("direct similarity: no scores for known category '" + known.name(y) + "'");
    score_col[y] = static_cast<Eigen::Index>(*c);
  }
  const Eigen::Index z_count = rel.values.rows();
  const auto take = std::min(top_k, known.size());
  Eigen::MatrixXd weights = Eigen::MatrixXd::Zero(z_count, static_cast<Eigen::Index>(known.size()));
  std::vector<Eigen::Index> order(known.size());
  for (Eigen::Index z = 0; z < z_count; ++z) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return rel.values(z, a) > rel.values(z, b); });
    double total = 0.0;
    for (std::size_t r = 0; r < take; ++r) total += rel.values(z, order[r]);
    if (!(total > 0.0)) throw ValidationError("unrelatable novel category '" + rel.categories().name(z) + "'");
    for (std::size_t r = 0; r < take; ++r) weights(z, order[r]) = rel.values(z, order[r]) / total;
  }
  Eigen::MatrixXd aligned(known_scores.values.rows(), static_cast<Eigen::Index>(known.size()));
  for (std::size_t y = 0; y < known.size(); ++y) aligned.col(y) = known_scores.values.col(score_col[y]);
  Eigen::MatrixXd out = aligned * weights.transpose();
  return CategoryScoreMatrix::create(known_scores.instances(), rel.categories(), std::move(out), false);
}

HierarchyMode parse_hierarchy_mode(std::string_view name) {
  if (name == "leaf") return HierarchyMode::Leaf;
  if (name == "inner") return HierarchyMode::Inner;
  if (name == "all") return HierarchyMode::All;
  throw ParseError("unknown hierarchy mode '" + std::string(name) + "'");
}

CategoryScoreMatrix hierarchy_transfer(const Taxonomy& tax, const CategoryScoreMatrix& known_scores,
                                       const Registry& novel_leaves, HierarchyMode mode) {
  const auto& known = known_scores.categories();
  if (known.empty()) throw ValidationError("hierarchy transfer: taxonomy has no known leaves");
  std::vector<std::size_t> known_node(known.size());
  std::vector<Eigen::Index> node_to_known(tax.size(), -1);
  for (std::size_t y = 0; y < known.size(); ++y) {
    const auto node = tax.nodes().find(known.name(y));
    if (!node) throw ValidationError("hierarchy transfer: known category '" + known.name(y) + "' not in taxonomy");
    known_node[y] = *node;
    node_to_known[*node] = static_cast<Eigen::Index>(y);
  }

  const Eigen::Index n = known_scores.values.rows();
  const auto z_count = static_cast<Eigen::Index>(novel_leaves.size());
  Eigen::MatrixXd out(n, z_count);
  for (Eigen::Index z = 0; z < z_count; ++z) {
    const auto& name = novel_leaves.name(z);
    const auto node = tax.nodes().find(name);
    if (!node) throw ValidationError("hierarchy transfer: novel category '" + name + "' not in taxonomy");
    const auto parent = tax.parent(*node);
    if (!parent) throw ValidationError("hierarchy transfer: novel category '" + name + "' is the root");

    std::size_t nearest = 0;
    for (std::size_t y = 1; y < known.size(); ++y) {
      if (tax.distance(*node, known_node[y]) < tax.distance(*node, known_node[nearest])) nearest = y;
    }
    const Eigen::VectorXd leaf_score = known_scores.values.col(static_cast<Eigen::Index>(nearest));

    std::vector<Eigen::Index> group;
    for (std::optional<std::size_t> anc = parent; anc && group.empty(); anc = tax.parent(*anc)) {
      for (auto d : tax.descendants(*anc)) {
        if (node_to_known[d] >= 0) group.push_back(node_to_known[d]);
      }
    }
    if (group.empty()) throw ValidationError("hierarchy transfer: no known category below any ancestor of '" + name + "'");
    std::sort(group.begin(), group.end());
    Eigen::VectorXd inner_score = Eigen::VectorXd::Zero(n);
    for (auto y : group) inner_score += known_scores.values.col(y);
    inner_score /= static_cast<double>(group.size());

    switch (mode) {
      case HierarchyMode::Leaf: out.col(z) = leaf_score; break;
      case HierarchyMode::Inner: out.col(z) = inner_score; break;
      case HierarchyMode::All: out.col(z) = 0.5 * (leaf_score + inner_score); break;
    }
  }
  return CategoryScoreMatrix::create(known_scores.instances(), novel_leaves, std::move(out), false);
}

}  // namespace semtransfer
