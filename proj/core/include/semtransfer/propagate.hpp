#pragma once

#include <Eigen/Sparse>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "semtransfer/matrix.hpp"
#include "semtransfer/split.hpp"

namespace semtransfer {

enum class KernelType { Gaussian, Cosine };

struct Kernel {
  KernelType type = KernelType::Gaussian;
  /// Gaussian bandwidth; unset means the median pairwise distance.
  std::optional<double> sigma;
};

KernelType parse_kernel(std::string_view name);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Symmetric non-negative instance graph and its normalization D^-1/2 W D^-1/2.
struct SimilarityGraph {
  Registry nodes;
  SparseMatrix weights;
  SparseMatrix normalized;
  Eigen::VectorXd degree;

  std::size_t size() const { return nodes.size(); }

  /// Validates W (square, symmetric, non-negative, zero diagonal, no isolated
  /// nodes, at least two nodes) and computes the normalized matrix.
  static SimilarityGraph from_weights(Registry nodes, SparseMatrix weights);
};

/// Median of pairwise Euclidean distances over at most `sample` evenly strided
/// rows. Falls back to the mean positive distance, then 1, when the median is 0.
double median_pairwise_distance(const Eigen::MatrixXd& rows, std::size_t sample = 1000);

/// Directed k-NN under the kernel (ties by row order) symmetrized with
/// W = max(W_knn, W_knn^T). Gaussian: exp(-|u-v|^2 / 2 sigma^2); cosine:
/// max(0, cos(u, v)). Zero-weight neighbours contribute no edge. Throws
/// ValidationError listing node ids left without neighbours.
SimilarityGraph build_knn_graph(const LabeledMatrix& vectors, std::size_t k, const Kernel& kernel);

/// Edge list with one row per undirected edge (i < j): header "<TAB>target<TAB>weight",
/// then "source<TAB>target<TAB>weight" by node id.
void write_graph_tsv(std::ostream& out, const SimilarityGraph& graph);
void write_graph_tsv(const std::filesystem::path& path, const SimilarityGraph& graph);

/// Instance x category seed weights; clamped rows are one-hot and held fixed.
struct SeedLabels {
  Registry instances;
  Registry categories;
  Eigen::MatrixXd values;
  std::vector<bool> clamped;

  bool any_clamped() const;
};

/// For every category column the top ceil(rho * n) instances (ties by row
/// order) get their column-min-max-normalized score; other entries are 0.
/// A constant column yields no seeds.
SeedLabels seed_from_zeroshot(const CategoryScoreMatrix& zero_shot, double rho);

/// Labeled rows become one-hot at their category and are clamped.
SeedLabels clamp_fewshot(SeedLabels seeds, const LabelMap& labels);

struct PropagationConfig {
  std::size_t k = 10;
  Kernel kernel;
  double alpha = 0.8;
  double tol = 1e-6;
  std::size_t max_iters = 1000;
  double seed_fraction = 0.05;

  /// Throws ValidationError unless 0 <= alpha < 1, k >= 1, tol > 0 and 0 < seed_fraction <= 1.
  void check() const;
};

struct PropagationResult {
  Eigen::MatrixXd scores;
  std::size_t iterations = 0;
  bool converged = false;
  double last_change = 0.0;
};

/// F <- alpha S F + (1 - alpha) Y from F = Y, resetting clamped rows after
/// every sweep, until the max-abs change drops below tol or max_iters.
PropagationResult propagate(const SimilarityGraph& graph, const SeedLabels& seeds, const PropagationConfig& config);

/// (1 - alpha)(I - alpha S)^-1 Y by dense LU. Unclamped seeds only.
Eigen::MatrixXd propagate_closed_form(const SimilarityGraph& graph, const SeedLabels& seeds, double alpha);

struct PstResult {
  CategoryScoreMatrix scores;
  std::vector<std::size_t> predictions;  // category index per instance
  SimilarityGraph graph;
  std::size_t iterations = 0;
  bool converged = false;

  LabelMap prediction_map() const;
};

/// Graph over `vectors` rows, seeded from the matching rows of `zero_shot`,
/// few-shot labels clamped, propagated, then argmax per row (ties by category order).
PstResult pst(const CategoryScoreMatrix& zero_shot, const LabeledMatrix& vectors, const LabelMap& fewshot,
              const PropagationConfig& config);

}  // namespace semtransfer
