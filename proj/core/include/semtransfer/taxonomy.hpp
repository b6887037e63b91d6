#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semtransfer/registry.hpp"

namespace semtransfer {

/// Rooted tree of concepts with optional information-content probabilities.
///
/// Node indices follow first appearance in the edge list (child before parent).
/// When probabilities are present they lie in (0,1], equal 1 at the root and
/// never decrease from a node to its parent.
class Taxonomy {
 public:
  using Edge = std::pair<std::string, std::string>;  // child, parent
  using Probability = std::pair<std::string, double>;

  /// Throws ValidationError for multiple roots, cycles, conflicting parents or
  /// probabilities that break the invariants above.
  static Taxonomy build(const std::vector<Edge>& edges, const std::vector<Probability>& probabilities = {});

  const Registry& nodes() const noexcept { return nodes_; }
  std::size_t size() const noexcept { return nodes_.size(); }
  std::size_t root() const noexcept { return root_; }
  std::optional<std::size_t> parent(std::size_t node) const;
  const std::vector<std::size_t>& children(std::size_t node) const { return children_.at(node); }
  bool is_leaf(std::size_t node) const { return children_.at(node).empty(); }
  std::size_t depth(std::size_t node) const { return depth_.at(node); }

  bool has_probabilities() const noexcept { return !prob_.empty(); }
  double probability(std::size_t node) const { return prob_.at(node); }

  /// Lowest common subsumer.
  std::size_t lcs(std::size_t a, std::size_t b) const;
  /// Number of edges on the path between a and b.
  std::size_t distance(std::size_t a, std::size_t b) const;
  /// Descendants of `node` (including itself when `include_self`), in index order.
  std::vector<std::size_t> descendants(std::size_t node, bool include_self = false) const;

 private:
  Registry nodes_;
  std::vector<std::optional<std::size_t>> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> depth_;
  std::vector<double> prob_;
  std::size_t root_ = 0;
};

/// Lin similarity 2 log p(lcs) / (log p(a) + log p(b)). Zero when the lcs is
/// the root. Probabilities are clamped to at least 1e-12 before the log.
/// Throws ValidationError for unknown nodes or a taxonomy without probabilities.
double lin_relatedness(const Taxonomy& tax, std::string_view a, std::string_view b);

/// child<TAB>parent edges and node<TAB>probability rows. Blank lines, "#"
/// comments and a header row with an empty first cell are skipped.
std::vector<Taxonomy::Edge> read_taxonomy_edges(const std::filesystem::path& path);
std::vector<Taxonomy::Probability> read_taxonomy_probabilities(const std::filesystem::path& path);
Taxonomy read_taxonomy(const std::filesystem::path& edges,
                       const std::optional<std::filesystem::path>& probabilities);

}  // namespace semtransfer
