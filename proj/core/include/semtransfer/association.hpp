#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "semtransfer/corpus.hpp"
#include "semtransfer/matrix.hpp"
#include "semtransfer/taxonomy.hpp"

namespace semtransfer {

/// Resources a relatedness measure may draw on. Pointers are non-owning.
struct RelatednessSources {
  const CorpusIndex* corpus = nullptr;
  const Taxonomy* taxonomy = nullptr;
  std::size_t window = kUnboundedWindow;  // dice_snippet only
};

/// Fills a category x attribute matrix by querying `measure` on every pair.
/// Throws ValidationError when the measure's resource is missing. Tf*idf is
/// not pairwise and must go through tfidf_associations.
RelatednessMatrix compute_relatedness(Measure measure, const RelatednessSources& sources,
                                      const Registry& categories, const Registry& attributes);

/// Composite category with its script documents.
struct ScriptCollection {
  std::string category;
  std::vector<std::string> documents;
};

/// entry(y, a) = tf(a | y) * log(C / df(a)). tf is the attribute's occurrence
/// count in y's documents over y's token count; df counts composites whose
/// documents mention a. Multi-word attributes count contiguous occurrences.
RelatednessMatrix tfidf_associations(std::span<const ScriptCollection> scripts, const Registry& attributes);

/// Groups documents by their `group` field, preserving first-seen order.
std::vector<ScriptCollection> group_scripts(std::span<const Document> docs);

enum class FusionMode { ClassifierFusion, Expanded };

FusionMode parse_fusion_mode(std::string_view name);

/// Each input is min-max normalized over all its entries (a constant matrix
/// maps to zeros). ClassifierFusion averages the normalized matrices
/// entrywise; Expanded concatenates their attribute axes, naming columns
/// "<measure>:<attribute>" (with the input position appended to the measure
/// when tags repeat).
RelatednessMatrix fuse_measures(std::span<const RelatednessMatrix> matrices, FusionMode mode);

/// Min-max normalization over every entry; constant input maps to zeros.
Eigen::MatrixXd min_max_normalize(const Eigen::MatrixXd& values);

struct BinarizePolicy {
  enum class Kind { PerAttributeTopK, GlobalThreshold, PerAttributeMean };
  Kind kind = Kind::PerAttributeTopK;
  std::size_t k = 1;
  double threshold = 0.0;

  static BinarizePolicy top_k(std::size_t k) { return {Kind::PerAttributeTopK, k, 0.0}; }
  static BinarizePolicy global_threshold(double t) { return {Kind::GlobalThreshold, 1, t}; }
  static BinarizePolicy per_attribute_mean() { return {Kind::PerAttributeMean, 1, 0.0}; }
  /// "topk:K", "threshold:T" or "mean".
  static BinarizePolicy parse(std::string_view spec);
};

/// TopK marks the min(k, #categories) most related categories per attribute
/// (ties by category order); GlobalThreshold marks entries >= t; Mean marks
/// entries strictly above their column mean.
AssociationMatrix binarize(const RelatednessMatrix& rel, const BinarizePolicy& policy);

}  // namespace semtransfer
