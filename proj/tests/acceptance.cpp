// One PASS/FAIL line per acceptance criterion; exits nonzero if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "semtransfer/classify.hpp"
#include "semtransfer/corpus.hpp"
#include "semtransfer/eval.hpp"
#include "semtransfer/propagate.hpp"
#include "semtransfer/synth.hpp"
#include "semtransfer/taxonomy.hpp"
#include "semtransfer/transfer.hpp"
#include "support.hpp"

using namespace semtransfer;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int n, const std::function<Verdict()>& check) {
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  if (!v.pass) ++failures;
  std::cout << "criterion " << n << ": " << (v.pass ? "PASS" : "FAIL") << " " << v.detail << std::endl;
}

std::string fmt(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

SeedLabels dense_seeds(const Eigen::MatrixXd& y) {
  return SeedLabels{numbered_registry("n", static_cast<std::size_t>(y.rows())),
                    numbered_registry("c", static_cast<std::size_t>(y.cols())), y,
                    std::vector<bool>(static_cast<std::size_t>(y.rows()), false)};
}

SimilarityGraph random_graph(Rng& rng, Eigen::Index n) {
  Eigen::MatrixXd p(n, 4);
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = rng.normal();
  const LabeledMatrix v{numbered_registry("n", static_cast<std::size_t>(n)), numbered_registry("d", 4), p};
  return build_knn_graph(v, 1 + rng.below(15), Kernel{});
}

struct SeedRun {
  SynthDataset ds;
  CategoryScoreMatrix dap;
  AttributeScoreMatrix attr;
  Registry test;
};

SeedRun dap_run(const SynthConfig& cfg) {
  auto ds = gen_dataset(cfg);
  const auto model = train_attribute_classifiers(ds.features, ds.split.train, ds.associations, TrainConfig{});
  auto attr = predict_attribute_scores(model, ds.features);
  const auto known = ds.associations.select_categories(ds.split.known_registry());
  const auto novel = ds.associations.select_categories(ds.split.novel_registry());
  auto zs = dap_scores(attr, novel, AttributePrior::empirical(known));
  Registry test;
  for (const auto& [id, c] : ds.split.test) test.add(id);
  return {std::move(ds), std::move(zs), std::move(attr), std::move(test)};
}

// PST accuracy on the novel test instances with `shots` few-shot labels per
// novel category clamped; few-shot instances join the graph.
double pst_accuracy(const SeedRun& run, std::size_t shots) {
  LabelMap few;
  std::map<std::string, std::size_t> used;
  Registry nodes = run.test;
  for (const auto& [id, c] : run.ds.split.fewshot) {
    if (used[c]++ < shots) {
      few[id] = c;
      nodes.add(id);
    }
  }
  LabeledMatrix v{nodes, run.attr.cols, Eigen::MatrixXd(nodes.size(), run.attr.cols.size())};
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    v.values.row(static_cast<Eigen::Index>(r)) =
        run.attr.values.row(static_cast<Eigen::Index>(run.attr.rows.index(nodes.name(r))));
  }
  const auto result = pst(softmax_rows(run.dap), v, few, PropagationConfig{});
  return evaluate_zero_shot(result.scores.select_instances(run.test), run.ds.labels, run.ds.split,
                            Protocol::NovelOnly)
      .accuracy;
}

double dap_accuracy(const SeedRun& run) {
  return evaluate_zero_shot(run.dap.select_instances(run.test), run.ds.labels, run.ds.split, Protocol::NovelOnly)
      .accuracy;
}

int run_cli(std::vector<std::string> args, std::string* err = nullptr) {
  args.insert(args.begin(), "semtransfer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, e;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, e);
  if (err) *err = e.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main() {
  report(1, [] {
    Rng rng(1001);
    const auto start = Clock::now();
    const double alphas[] = {0.1, 0.5, 0.9};
    double worst = 0.0;
    bool converged = true;
    for (int g = 0; g < 50; ++g) {
      const auto n = static_cast<Eigen::Index>(20 + rng.below(181));
      const auto graph = random_graph(rng, n);
      const auto y = dense_seeds(testing::uniform_matrix(rng, n, 1 + static_cast<Eigen::Index>(rng.below(4))));
      PropagationConfig cfg;
      cfg.alpha = alphas[g % 3];
      cfg.tol = 1e-11;
      cfg.max_iters = 100000;
      const auto r = propagate(graph, y, cfg);
      converged = converged && r.converged;
      worst = std::max(worst, (r.scores - propagate_closed_form(graph, y, cfg.alpha)).cwiseAbs().maxCoeff());
    }
    const double t = seconds_since(start);
    return Verdict{converged && worst <= 1e-6 && t < 30.0,
                   "max |iterative - closed form| = " + fmt(worst) + " over 50 graphs in " + fmt(t) + " s"};
  });

  report(2, [] {
    Rng rng(1002);
    bool same = true;
    for (int g = 0; g < 10; ++g) {
      const auto n = static_cast<Eigen::Index>(10 + rng.below(100));
      const auto graph = random_graph(rng, n);
      const auto y = dense_seeds(testing::uniform_matrix(rng, n, 3));
      PropagationConfig cfg;
      cfg.alpha = 0.0;
      const auto r = propagate(graph, y, cfg);
      same = same && r.scores.size() == y.values.size() &&
             std::memcmp(r.scores.data(), y.values.data(), sizeof(double) * static_cast<std::size_t>(y.values.size())) == 0;
    }
    return Verdict{same, "alpha = 0 returns the seed matrix bit for bit on 10 graphs"};
  });

  report(3, [] {
    Rng rng(1003);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const Eigen::Index n = 30, d = 1 + static_cast<Eigen::Index>(rng.below(6));
      Eigen::MatrixXd x(n, d);
      Eigen::VectorXd t(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
        t(i) = static_cast<double>(rng.bernoulli(0.5));
      }
      const LogisticObjective obj(x, t, 1e-3);
      Eigen::VectorXd p(d + 1), g, fd(d + 1);
      for (Eigen::Index j = 0; j <= d; ++j) p(j) = rng.normal();
      obj.value_and_gradient(p, g);
      for (Eigen::Index j = 0; j <= d; ++j) {
        Eigen::VectorXd up = p, dn = p;
        up(j) += 1e-5;
        dn(j) -= 1e-5;
        fd(j) = (obj.value(up) - obj.value(dn)) / 2e-5;
      }
      worst = std::max(worst, (g - fd).norm() / std::max(1e-12, fd.norm()));
    }
    return Verdict{worst < 1e-4, "max relative gradient error " + fmt(worst) + " at 20 points"};
  });

  report(4, [] {
    testing::TempDir dir("acc4");
    std::ofstream(dir / "run.json") << R"({"data": {"synth": {"flip_noise": 0, "cluster_scale": 0, "feature_noise": 0}},
      "propagation": {"enabled": false}})";
    const auto start = Clock::now();
    std::string err;
    const int code = run_cli({"pipeline", (dir / "run.json").string()}, &err);
    const double t = seconds_since(start);
    if (code != 0) return Verdict{false, "pipeline exit " + std::to_string(code) + ": " + err};
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "report.json"));
    const double acc = j["zero_shot"][0]["accuracy"].get<double>();
    return Verdict{acc == 1.0 && t < 10.0, "noiseless DAP accuracy " + fmt(acc) + " end to end in " + fmt(t) + " s"};
  });

  report(5, [] {
    int wins = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SynthConfig cfg;
      cfg.seed = seed;
      const auto run = dap_run(cfg);
      const double d = dap_accuracy(run), p = pst_accuracy(run, 0);
      wins += p >= d;
      detail += " " + fmt(d) + "->" + fmt(p);
    }
    return Verdict{wins >= 8, "PST >= DAP on " + std::to_string(wins) + "/10 seeds:" + detail};
  });

  report(6, [] {
    const std::size_t levels[] = {0, 1, 2, 5, 10};
    std::vector<double> mean(5, 0.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SynthConfig cfg;
      cfg.seed = seed;
      cfg.fewshot_per_category = 10;
      const auto run = dap_run(cfg);
      for (std::size_t l = 0; l < 5; ++l) mean[l] += pst_accuracy(run, levels[l]) / 10.0;
    }
    bool ok = true;
    std::string detail = "mean accuracy at 0/1/2/5/10 shots:";
    for (std::size_t l = 0; l < 5; ++l) {
      detail += " " + fmt(mean[l]);
      if (l > 0 && mean[l] < mean[l - 1] - 0.01) ok = false;
    }
    return Verdict{ok, detail};
  });

  report(7, [] {
    Rng rng(1007);
    Eigen::MatrixXd a(12, 20);
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = static_cast<double>(rng.bernoulli(0.3));
    const auto assoc = AssociationMatrix::create(numbered_registry("cat", 12), numbered_registry("attr", 20), a, true);
    const auto plan = corpus_plan_from_associations(assoc, 3, 2, 7);
    const auto index = CorpusIndex::build(gen_corpus(plan));
    std::size_t mismatches = 0;
    for (const auto& c : assoc.categories().names()) {
      for (const auto& t : assoc.attributes().names()) mismatches += dice_hitcount(index, c, t) != planned_dice(plan, c, t);
    }
    std::vector<std::string> vocab;
    for (std::size_t v = 0; v < 40; ++v) vocab.push_back("w" + std::to_string(v));
    std::vector<Document> docs;
    for (std::size_t d = 0; d < 300; ++d) {
      std::string text;
      const auto len = 1 + rng.below(30);
      for (std::size_t k = 0; k < len; ++k) text += vocab[rng.below(vocab.size())] + " ";
      docs.push_back({"d" + std::to_string(d), text, ""});
    }
    const auto random_index = CorpusIndex::build(docs);
    std::size_t snippet_mismatches = 0;
    for (int pair = 0; pair < 1000; ++pair) {
      const auto& x = vocab[rng.below(vocab.size())];
      const auto& y = vocab[rng.below(vocab.size())];
      snippet_mismatches += dice_snippet(random_index, kUnboundedWindow, x, y) != dice_hitcount(random_index, x, y);
    }
    return Verdict{mismatches == 0 && snippet_mismatches == 0,
                   std::to_string(mismatches) + " planned dice mismatches over 240 pairs, " +
                       std::to_string(snippet_mismatches) + " unbounded snippet mismatches over 1000 pairs"};
  });

  report(8, [] {
    const auto tax =
        Taxonomy::build({{"animal", "root"}, {"horse", "animal"}, {"zebra", "animal"}, {"rock", "root"}},
                        {{"root", 1.0}, {"animal", 0.5}, {"horse", 0.25}, {"zebra", 0.25}, {"rock", 0.5}});
    const double v = lin_relatedness(tax, "horse", "zebra");
    return Verdict{std::abs(v - 0.5) <= 1e-12, "lin(horse, zebra) = " + fmt(v)};
  });

  report(9, [] {
    const std::vector<double> s{0.9, 0.4, 0.6, 0.1};
    const double perfect = roc_auc(s, {true, false, true, false});
    const double swapped = roc_auc(s, {false, true, true, false});
    const double late = roc_auc(s, {false, false, true, true});
    Eigen::MatrixXd w(2, 2);
    w << 0.9, 0.3, 0.8, 0.2;
    const double map = mean_ap(CategoryScoreMatrix::create(Registry{"p", "q"}, Registry{"z0", "z1"}, w),
                               {{"p", "z0"}, {"q", "z1"}});
    const double ap_perfect = average_precision(std::vector<double>{0.9, 0.8, 0.1}, {true, true, false});
    const double ap_second = average_precision(std::vector<double>{0.9, 0.8, 0.3, 0.1}, {false, true, false, false});
    const double ties = roc_auc(std::vector<double>{0.3, 0.3, 0.3, 0.3}, {true, false, true, false});
    const bool ok = perfect == 1.0 && swapped == 0.5 && late == 0.25 && ties == 0.5 && map == 0.75 &&
                    ap_perfect == 1.0 && ap_second == 0.5;
    return Verdict{ok, "AUC " + fmt(perfect) + " / " + fmt(swapped) + " / " + fmt(late) + " / ties " + fmt(ties) +
                           ", AP " + fmt(ap_perfect) + " / " + fmt(ap_second) + ", mean AP " + fmt(map)};
  });

  report(10, [] {
    SynthConfig cfg;
    cfg.seed = 5;
    cfg.distractors_per_category = 3;
    const auto run = dap_run(cfg);
    Registry all;
    for (const auto& [id, c] : run.ds.split.test) all.add(id);
    // Distractors scored above every novel instance in every column.
    auto scores = run.dap.select_instances(all);
    const double top = scores.values.maxCoeff() + 1.0;
    for (std::size_t r = 0; r < all.size(); ++r) {
      const auto& truth = run.ds.split.test.at(all.name(r));
      if (!run.ds.split.novel_registry().contains(truth)) scores.values.row(static_cast<Eigen::Index>(r)).setConstant(top);
    }
    const auto novel = evaluate_zero_shot(scores, run.ds.split.test, run.ds.split, Protocol::NovelOnly);
    const auto with = evaluate_zero_shot(scores, run.ds.split.test, run.ds.split, Protocol::WithDistractors);
    const bool ok = with.distractor_instances > 0 && with.mean_auc <= novel.mean_auc + 1e-9 &&
                    with.mean_auc < novel.mean_auc;
    return Verdict{ok, "mean AUC novel_only " + fmt(novel.mean_auc) + ", with_distractors " + fmt(with.mean_auc) +
                           " (" + std::to_string(with.distractor_instances) + " distractors)"};
  });

  report(11, [] {
    testing::TempDir dir("acc11");
    std::ofstream(dir / "run.json") << R"({"data": {"synth": {"seed": 11, "fewshot_per_category": 3,
      "distractors_per_category": 2}}, "associations": {"source": "mine"}})";
    std::string err;
    if (run_cli({"pipeline", (dir / "run.json").string(), "--set", "output_dir=a"}, &err) != 0) return Verdict{false, err};
    if (run_cli({"pipeline", (dir / "run.json").string(), "--set", "output_dir=b"}, &err) != 0) return Verdict{false, err};
    const auto a = slurp(dir / "a" / "report.json");
    const auto b = slurp(dir / "b" / "report.json");
    return Verdict{!a.empty() && a == b, "two runs, report.json " + std::to_string(a.size()) + " bytes, " +
                                             (a == b ? "identical" : "different")};
  });

  return failures == 0 ? 0 : 1;
}
