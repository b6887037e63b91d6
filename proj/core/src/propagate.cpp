#include "semtransfer/propagate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "semtransfer/error.hpp"
#include "semtransfer/tsv.hpp"

namespace semtransfer {

KernelType parse_kernel(std::string_view name) {
  if (name == "gaussian") return KernelType::Gaussian;
  if (name == "cosine") return KernelType::Cosine;
  throw ParseError("unknown kernel '" + std::string(name) + "'");
}

SimilarityGraph SimilarityGraph::from_weights(Registry nodes, SparseMatrix weights) {
  const auto n = static_cast<Eigen::Index>(nodes.size());
  if (n < 2) throw ValidationError("graph needs at least two nodes");
  if (weights.rows() != n || weights.cols() != n) throw ValidationError("graph weight matrix has wrong shape");
  weights.makeCompressed();
  Eigen::VectorXd degree = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(weights, i); it; ++it) {
      const double w = it.value();
      if (!std::isfinite(w) || w < 0.0) throw ValidationError("graph weights must be finite and non-negative");
      if (it.col() == i && w != 0.0) throw ValidationError("graph has a self loop at '" + nodes.name(i) + "'");
      if (weights.coeff(it.col(), i) != w) throw ValidationError("graph weight matrix is not symmetric");
      degree[i] += w;
    }
  }
  std::string isolated;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (degree[i] <= 0.0) isolated += (isolated.empty() ? "" : ", ") + nodes.name(i);
  }
  if (!isolated.empty()) throw ValidationError("isolated graph nodes: " + isolated);

  SimilarityGraph g;
  g.nodes = std::move(nodes);
  g.degree = degree;
  g.normalized = weights;
  const Eigen::VectorXd inv_sqrt = degree.array().rsqrt();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (SparseMatrix::InnerIterator it(g.normalized, i); it; ++it) {
      it.valueRef() *= inv_sqrt[i] * inv_sqrt[it.col()];
    }
  }
  g.weights = std::move(weights);
  return g;
}

double median_pairwise_distance(const Eigen::MatrixXd& rows, std::size_t sample) {
  const auto n = static_cast<std::size_t>(rows.rows());
  if (n < 2) return 1.0;
  std::vector<Eigen::Index> picked;
  const std::size_t m = std::min(n, std::max<std::size_t>(sample, 2));
  for (std::size_t i = 0; i < m; ++i) picked.push_back(static_cast<Eigen::Index>(i * n / m));
  std::vector<double> dist;
  dist.reserve(m * (m - 1) / 2);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) dist.push_back((rows.row(picked[a]) - rows.row(picked[b])).norm());
  }
  auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  double median = *mid;
  if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
  if (median > 0.0) return median;
  double sum = 0.0;
  std::size_t count = 0;
  for (double d : dist) {
    if (d > 0.0) {
      sum += d;
      ++count;
    }
  }
  return count > 0 ? sum / static_cast<double>(count) : 1.0;
}

SimilarityGraph build_knn_graph(const LabeledMatrix& vectors, std::size_t k, const Kernel& kernel) {
  const Eigen::MatrixXd& x = vectors.values;
  const auto n = static_cast<std::size_t>(x.rows());
  if (n < 2) throw ValidationError("k-NN graph needs at least two rows");
  if (k < 1 || k >= n) throw ValidationError("k-NN graph needs 1 <= k < n");

  double inv_two_sigma_sq = 0.0;
  Eigen::VectorXd norms;
  if (kernel.type == KernelType::Gaussian) {
    const double sigma = kernel.sigma ? *kernel.sigma : median_pairwise_distance(x);
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("gaussian kernel needs sigma > 0");
    inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
  } else {
    norms = x.rowwise().norm();
  }

  struct Edge {
    std::size_t a, b;
    double w;
  };
  std::vector<Edge> edges;
  edges.reserve(n * k);
  std::vector<std::pair<double, std::size_t>> cand(n - 1);  // (similarity, j)
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double sim = 0.0;
      if (kernel.type == KernelType::Gaussian) {
        sim = std::exp(-(x.row(i) - x.row(j)).squaredNorm() * inv_two_sigma_sq);
      } else {
        const double denom = norms[i] * norms[j];
        sim = denom > 0.0 ? std::max(0.0, x.row(i).dot(x.row(j)) / denom) : 0.0;
      }
      cand[c++] = {sim, j};
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                      [](const auto& p, const auto& q) { return p.first > q.first || (p.first == q.first && p.second < q.second); });
    for (std::size_t r = 0; r < k; ++r) {
      if (cand[r].first > 0.0) edges.push_back({std::min(i, cand[r].second), std::max(i, cand[r].second), cand[r].first});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& p, const Edge& q) { return p.a != q.a ? p.a < q.a : p.b < q.b; });
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t e = 0; e < edges.size();) {
    double w = edges[e].w;
    std::size_t f = e + 1;
    while (f < edges.size() && edges[f].a == edges[e].a && edges[f].b == edges[e].b) w = std::max(w, edges[f++].w);
    triplets.emplace_back(edges[e].a, edges[e].b, w);
    triplets.emplace_back(edges[e].b, edges[e].a, w);
    e = f;
  }
  SparseMatrix w(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  w.setFromTriplets(triplets.begin(), triplets.end());
  return SimilarityGraph::from_weights(vectors.rows, std::move(w));
}

void write_graph_tsv(std::ostream& out, const SimilarityGraph& graph) {
  out << "\ttarget\tweight\n";
  for (Eigen::Index i = 0; i < graph.weights.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(graph.weights, i); it; ++it) {
      if (it.col() > i) {
        out << graph.nodes.name(i) << '\t' << graph.nodes.name(it.col()) << '\t' << format_number(it.value()) << '\n';
      }
    }
  }
}

void write_graph_tsv(const std::filesystem::path& path, const SimilarityGraph& graph) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  write_graph_tsv(out, graph);
}

bool SeedLabels::any_clamped() const { return std::find(clamped.begin(), clamped.end(), true) != clamped.end(); }

SeedLabels seed_from_zeroshot(const CategoryScoreMatrix& zero_shot, double rho) {
  if (!(rho > 0.0 && rho <= 1.0)) throw ValidationError("seed fraction must lie in (0, 1]");
  const Eigen::MatrixXd& s = zero_shot.values;
  const auto n = static_cast<std::size_t>(s.rows());
  SeedLabels seeds{zero_shot.instances(), zero_shot.categories(), Eigen::MatrixXd::Zero(s.rows(), s.cols()),
                   std::vector<bool>(n, false)};
  if (n == 0) return seeds;
  const double exact = rho * static_cast<double>(n);
  auto take = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  take = std::clamp<std::size_t>(take, 1, n);
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index c = 0; c < s.cols(); ++c) {
    const double lo = s.col(c).minCoeff();
    const double hi = s.col(c).maxCoeff();
    if (hi == lo) continue;
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s(a, c) > s(b, c); });
    for (std::size_t r = 0; r < take; ++r) seeds.values(order[r], c) = (s(order[r], c) - lo) / (hi - lo);
  }
  return seeds;
}

SeedLabels clamp_fewshot(SeedLabels seeds, const LabelMap& labels) {
  for (const auto& [inst, cat] : labels) {
    const auto r = seeds.instances.find(inst);
    if (!r) throw ValidationError("few-shot instance '" + inst + "' is not in the graph");
    const auto c = seeds.categories.find(cat);
    if (!c) throw ValidationError("few-shot label '" + cat + "' is not a propagated category");
    const auto row = static_cast<Eigen::Index>(*r);
    seeds.values.row(row).setZero();
    seeds.values(row, static_cast<Eigen::Index>(*c)) = 1.0;
    seeds.clamped[*r] = true;
  }
  return seeds;
}

void PropagationConfig::check() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ValidationError("propagation: alpha must satisfy 0 <= alpha < 1");
  if (k < 1) throw ValidationError("propagation: k must be at least 1");
  if (!(tol > 0.0)) throw ValidationError("propagation: tol must be positive");
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) throw ValidationError("propagation: seed_fraction must lie in (0, 1]");
  if (kernel.sigma && !(*kernel.sigma > 0.0)) throw ValidationError("propagation: sigma must be positive");
}

namespace {

void check_seeds(const SimilarityGraph& graph, const SeedLabels& seeds) {
  if (!(seeds.instances == graph.nodes)) throw ValidationError("seed rows do not match graph nodes");
  if (seeds.values.rows() != static_cast<Eigen::Index>(graph.size())) throw ValidationError("seed matrix has wrong row count");
  if (!seeds.values.allFinite() || (seeds.values.array() < 0.0).any()) {
    throw ValidationError("seed weights must be finite and non-negative");
  }
}

}  // namespace

PropagationResult propagate(const SimilarityGraph& graph, const SeedLabels& seeds, const PropagationConfig& config) {
  if (!(config.alpha >= 0.0 && config.alpha < 1.0)) throw ValidationError("propagation: alpha must satisfy 0 <= alpha < 1");
  if (!(config.tol > 0.0)) throw ValidationError("propagation: tol must be positive");
  check_seeds(graph, seeds);
  const Eigen::MatrixXd& y = seeds.values;
  std::vector<Eigen::Index> clamped;
  for (std::size_t i = 0; i < seeds.clamped.size(); ++i) {
    if (seeds.clamped[i]) clamped.push_back(static_cast<Eigen::Index>(i));
  }

  PropagationResult result;
  Eigen::MatrixXd current = y;
  Eigen::MatrixXd next(y.rows(), y.cols());
  const Eigen::MatrixXd base = (1.0 - config.alpha) * y;
  while (result.iterations < config.max_iters) {
    next.noalias() = graph.normalized * current;
    next = config.alpha * next + base;
    for (auto r : clamped) next.row(r) = y.row(r);
    result.last_change = y.size() == 0 ? 0.0 : (next - current).cwiseAbs().maxCoeff();
    current.swap(next);
    ++result.iterations;
    if (result.last_change < config.tol) {
      result.converged = true;
      break;
    }
  }
  result.scores = std::move(current);
  return result;
}

Eigen::MatrixXd propagate_closed_form(const SimilarityGraph& graph, const SeedLabels& seeds, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw ValidationError("propagation: alpha must satisfy 0 <= alpha < 1");
  check_seeds(graph, seeds);
  if (seeds.any_clamped()) throw ValidationError("closed form requires unclamped seeds");
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - alpha * Eigen::MatrixXd(graph.normalized);
  return (1.0 - alpha) * system.partialPivLu().solve(seeds.values);
}

LabelMap PstResult::prediction_map() const {
  LabelMap out;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out.emplace(scores.instances().name(i), scores.categories().name(predictions[i]));
  }
  return out;
}

PstResult pst(const CategoryScoreMatrix& zero_shot, const LabeledMatrix& vectors, const LabelMap& fewshot,
              const PropagationConfig& config) {
  config.check();
  const auto aligned = zero_shot.select_instances(vectors.rows);
  auto graph = build_knn_graph(vectors, config.k, config.kernel);
  auto seeds = clamp_fewshot(seed_from_zeroshot(aligned, config.seed_fraction), fewshot);
  auto prop = propagate(graph, seeds, config);
  std::vector<std::size_t> predictions(static_cast<std::size_t>(prop.scores.rows()));
  for (Eigen::Index i = 0; i < prop.scores.rows(); ++i) {
    predictions[static_cast<std::size_t>(i)] = static_cast<std::size_t>(argmax_first(prop.scores.row(i).transpose()));
  }
  auto scores = CategoryScoreMatrix::create(vectors.rows, zero_shot.categories(), std::move(prop.scores), false);
  return PstResult{std::move(scores), std::move(predictions), std::move(graph), prop.iterations, prop.converged};
}

}  // namespace semtransfer
