#include <benchmark/benchmark.h>

#include "semtransfer/classify.hpp"
#include "semtransfer/corpus.hpp"
#include "semtransfer/propagate.hpp"
#include "semtransfer/rng.hpp"
#include "semtransfer/synth.hpp"

using namespace semtransfer;

namespace {

LabeledMatrix points(std::size_t n, std::size_t d) {
  Rng rng(n);
  Eigen::MatrixXd p(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.normal();
  return {numbered_registry("n", n), numbered_registry("d", d), p};
}

SeedLabels random_seeds(std::size_t n, std::size_t c) {
  Rng rng(7);
  Eigen::MatrixXd y(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = rng.uniform();
  return {numbered_registry("n", n), numbered_registry("c", c), y, std::vector<bool>(n, false)};
}

void BM_KnnGraph(benchmark::State& state) {
  const auto v = points(static_cast<std::size_t>(state.range(0)), 16);
  for (auto _ : state) benchmark::DoNotOptimize(build_knn_graph(v, 10, Kernel{}));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_KnnGraph)->RangeMultiplier(2)->Range(128, 2048)->Complexity();

void BM_Propagate(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = build_knn_graph(points(n, 16), 10, Kernel{});
  const auto y = random_seeds(n, 5);
  PropagationConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(propagate(g, y, cfg));
}
BENCHMARK(BM_Propagate)->RangeMultiplier(4)->Range(256, 16384);

void BM_ClosedForm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto g = build_knn_graph(points(n, 16), 10, Kernel{});
  const auto y = random_seeds(n, 5);
  for (auto _ : state) benchmark::DoNotOptimize(propagate_closed_form(g, y, 0.8));
}
BENCHMARK(BM_ClosedForm)->RangeMultiplier(2)->Range(128, 1024);

void BM_DiceHitcount(benchmark::State& state) {
  SynthConfig sc;
  sc.n_known = static_cast<std::size_t>(state.range(0));
  const auto ds = gen_dataset(sc);
  const auto index = CorpusIndex::build(gen_corpus(corpus_plan_from_associations(ds.associations, 3, 2, 0)));
  const auto& cats = ds.associations.categories().names();
  const auto& attrs = ds.associations.attributes().names();
  for (auto _ : state) {
    double total = 0.0;
    for (const auto& c : cats) {
      for (const auto& a : attrs) total += dice_hitcount(index, c, a);
    }
    benchmark::DoNotOptimize(total);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cats.size() * attrs.size()));
}
BENCHMARK(BM_DiceHitcount)->Arg(30)->Arg(200);

void BM_TrainAttributes(benchmark::State& state) {
  SynthConfig sc;
  sc.train_per_category = static_cast<std::size_t>(state.range(0));
  const auto ds = gen_dataset(sc);
  TrainConfig tc;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_attribute_classifiers(ds.features, ds.split.train, ds.associations, tc));
  }
}
BENCHMARK(BM_TrainAttributes)->Arg(20)->Arg(60)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
