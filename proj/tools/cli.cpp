#include "cli.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>

#include "pipeline.hpp"
#include "semtransfer/association.hpp"
#include "semtransfer/classify.hpp"
#include "semtransfer/corpus.hpp"
#include "semtransfer/error.hpp"
#include "semtransfer/eval.hpp"
#include "semtransfer/propagate.hpp"
#include "semtransfer/synth.hpp"
#include "semtransfer/taxonomy.hpp"
#include "semtransfer/transfer.hpp"
#include "semtransfer/tsv.hpp"

namespace fs = std::filesystem;

namespace semtransfer::cli {

namespace {

void diagnostic(std::ostream& err, const std::string& kind, const std::string& message, int code) {
  nlohmann::ordered_json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  err << j.dump() << '\n';
}

void warn(std::ostream& err, const std::string& message) {
  err << nlohmann::ordered_json{{"warning", message}}.dump() << '\n';
}

CategoryScoreMatrix known_score_matrix(const fs::path& path, const Registry& known) {
  const auto s = read_category_scores(path);
  for (const auto& k : known.names()) {
    if (!s.categories().contains(k)) throw ValidationError("scores lack known category '" + k + "'");
  }
  Eigen::MatrixXd v(s.values.rows(), static_cast<Eigen::Index>(known.size()));
  for (std::size_t c = 0; c < known.size(); ++c) {
    v.col(static_cast<Eigen::Index>(c)) = s.values.col(static_cast<Eigen::Index>(s.categories().index(known.name(c))));
  }
  return CategoryScoreMatrix::create(s.instances(), known, std::move(v), false);
}

RelatednessMatrix novel_known_relatedness(const RelatednessMatrix& rel, const Registry& novel, const Registry& known) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(novel.size()), static_cast<Eigen::Index>(known.size()));
  for (std::size_t z = 0; z < novel.size(); ++z) {
    for (std::size_t y = 0; y < known.size(); ++y) {
      if (!rel.rows.contains(novel.name(z))) throw ValidationError("relatedness lacks row '" + novel.name(z) + "'");
      if (!rel.cols.contains(known.name(y))) throw ValidationError("relatedness lacks column '" + known.name(y) + "'");
      v(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(y)) = rel.at(novel.name(z), known.name(y));
    }
  }
  return RelatednessMatrix::create(novel, known, std::move(v), rel.measure);
}

struct MineArgs {
  std::string corpus, taxonomy, probabilities, measure, terms, out;
  std::optional<std::size_t> window;
};

int cmd_mine(const MineArgs& a) {
  const auto measure = parse_measure(a.measure);
  std::optional<std::vector<Document>> docs;
  std::optional<CorpusIndex> index;
  std::optional<Taxonomy> tax;
  if (!a.corpus.empty()) docs = read_corpus_jsonl(fs::path(a.corpus));
  if (!a.taxonomy.empty()) {
    tax = read_taxonomy(a.taxonomy, a.probabilities.empty() ? std::nullopt : std::optional<fs::path>(a.probabilities));
  }
  const Terms terms = read_terms(a.terms);
  if (terms.attributes.empty()) throw ValidationError("terms file lists no attributes");
  const Registry attributes(terms.attributes);
  RelatednessMatrix rel;
  if (measure == Measure::Tfidf) {
    if (!docs) throw ValidationError("tfidf measure requires a corpus");
    const auto scripts = group_scripts(*docs);
    rel = tfidf_associations(scripts, attributes);
    if (!terms.categories.empty()) {
      const Registry cats(terms.categories);
      Eigen::MatrixXd v(static_cast<Eigen::Index>(cats.size()), rel.values.cols());
      for (std::size_t c = 0; c < cats.size(); ++c) {
        if (!rel.rows.contains(cats.name(c))) throw ValidationError("no script documents for '" + cats.name(c) + "'");
        v.row(static_cast<Eigen::Index>(c)) = rel.values.row(static_cast<Eigen::Index>(rel.rows.index(cats.name(c))));
      }
      rel = RelatednessMatrix::create(cats, attributes, std::move(v), Measure::Tfidf);
    }
  } else {
    if (terms.categories.empty()) throw ValidationError("terms file lists no categories");
    if (docs) index = CorpusIndex::build(*docs);
    RelatednessSources src;
    src.corpus = index ? &*index : nullptr;
    src.taxonomy = tax ? &*tax : nullptr;
    if (a.window) src.window = *a.window;
    rel = compute_relatedness(measure, src, Registry(terms.categories), attributes);
  }
  write_relatedness(a.out, rel);
  return kOk;
}

struct AssocArgs {
  std::vector<std::string> inputs;
  std::string fusion = "classifier_fusion";
  std::string policy = "mean";
  std::string out;
};

int cmd_assoc(const AssocArgs& a) {
  std::vector<RelatednessMatrix> rels;
  for (const auto& p : a.inputs) rels.push_back(read_relatedness(p));
  const auto mode = parse_fusion_mode(a.fusion);
  const auto fused = fuse_measures(rels, mode);
  if (a.policy == "none") {
    write_association(a.out, AssociationMatrix::create(fused.rows, fused.cols, fused.values, false));
  } else {
    write_association(a.out, binarize(fused, BinarizePolicy::parse(a.policy)));
  }
  return kOk;
}

struct TrainArgs {
  std::string features, split, assoc, target = "attributes", out;
  TrainConfig config;
};

int cmd_train(const TrainArgs& a, std::ostream& err) {
  const auto features = read_features(a.features);
  const auto split = read_split(a.split);
  AttributeModel model;
  if (a.target == "attributes") {
    if (a.assoc.empty()) throw ValidationError("--assoc is required for attribute targets");
    model = train_attribute_classifiers(features, split.train, read_association(a.assoc), a.config);
  } else if (a.target == "categories") {
    model = train_category_classifiers(features, split.train, split.known_registry(), a.config);
  } else {
    throw ValidationError("unknown target '" + a.target + "'");
  }
  for (const auto& d : model.degenerate_attributes()) warn(err, "degenerate attribute " + d);
  save_model(a.out, model);
  return kOk;
}

int cmd_score(const std::string& model, const std::string& features, const std::string& out) {
  write_tsv(out, predict_attribute_scores(load_model(model), read_features(features)));
  return kOk;
}

struct ZeroShotArgs {
  std::string method = "dap", scores, assoc, split, prior = "empirical", relatedness, taxonomy, mode = "inner", out;
  std::size_t top_k = 3;
};

int cmd_zeroshot(const ZeroShotArgs& a) {
  const auto split = read_split(a.split);
  const auto known = split.known_registry();
  const auto novel = split.novel_registry();
  CategoryScoreMatrix zs;
  if (a.method == "dap") {
    if (a.assoc.empty()) throw ValidationError("dap requires --assoc");
    const auto assoc = read_association(a.assoc);
    AttributePrior prior;
    if (a.prior == "empirical") prior = AttributePrior::empirical(assoc.select_categories(known));
    else if (a.prior == "uniform") prior = AttributePrior::uniform(assoc.attributes());
    else throw ValidationError("unknown prior '" + a.prior + "'");
    zs = dap_scores(read_attribute_scores(a.scores), assoc.select_categories(novel), prior);
  } else if (a.method == "sim") {
    if (a.relatedness.empty()) throw ValidationError("sim requires --relatedness");
    const auto rel = novel_known_relatedness(read_relatedness(a.relatedness), novel, known);
    zs = direct_similarity_scores(known_score_matrix(a.scores, known), rel, a.top_k);
  } else if (a.method == "hier") {
    if (a.taxonomy.empty()) throw ValidationError("hier requires --taxonomy");
    const auto tax = read_taxonomy(a.taxonomy, std::nullopt);
    zs = hierarchy_transfer(tax, known_score_matrix(a.scores, known), novel, parse_hierarchy_mode(a.mode));
  } else {
    throw ValidationError("unknown method '" + a.method + "'");
  }
  write_category_scores(a.out, zs);
  return kOk;
}

struct PstArgs {
  std::string zeroshot, vectors, split, out, predictions, graph;
  std::string kernel = "gaussian";
  std::optional<double> sigma;
  bool softmax = false;
  bool strict = false;
  PropagationConfig config;
};

int cmd_pst(PstArgs a, std::ostream& err) {
  a.config.kernel.type = parse_kernel(a.kernel);
  a.config.kernel.sigma = a.sigma;
  a.config.check();
  auto zs = read_category_scores(a.zeroshot);
  if (a.softmax) zs = softmax_rows(zs);
  const auto vectors = read_tsv(fs::path(a.vectors)).matrix;
  LabelMap fewshot;
  if (!a.split.empty()) fewshot = read_split(a.split).fewshot;
  const auto res = pst(zs, vectors, fewshot, a.config);
  write_category_scores(a.out, res.scores);
  if (!a.predictions.empty()) write_predictions(a.predictions, res.scores.instances(), res.scores.categories(), res.predictions);
  if (!a.graph.empty()) write_graph_tsv(fs::path(a.graph), res.graph);
  if (!res.converged) {
    const auto msg = "propagation did not converge after " + std::to_string(res.iterations) + " iterations";
    if (a.strict) {
      diagnostic(err, "not_converged", msg, kNotConverged);
      return kNotConverged;
    }
    warn(err, msg);
  }
  return kOk;
}

struct EvalArgs {
  std::string scores, split, protocol = "both", out, tsv;
  bool map = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto scores = read_category_scores(a.scores);
  const auto split = read_split(a.split);
  LabelMap truth = split.test;
  Registry rows;
  for (const auto& [id, cat] : split.test) rows.add(id);
  const auto test_scores = scores.select_instances(rows);
  std::vector<Protocol> protocols;
  if (a.protocol == "both") protocols = {Protocol::NovelOnly, Protocol::WithDistractors};
  else protocols = {parse_protocol(a.protocol)};
  const auto novel = split.novel_registry();
  std::vector<EvalReport> reports;
  for (const auto p : protocols) {
    auto r = evaluate_zero_shot(test_scores, truth, split, p);
    if (a.map) {
      Registry ap_rows;
      for (const auto& [id, cat] : split.test) {
        if (p == Protocol::WithDistractors || novel.contains(cat)) ap_rows.add(id);
      }
      r.mean_ap = mean_ap(test_scores.select_instances(ap_rows), truth, &r.average_precision);
      r.has_ap = true;
    }
    reports.push_back(std::move(r));
  }
  const auto text = reports_to_json(reports);
  if (a.out.empty()) out << text << '\n';
  else write_text(a.out, text + "\n");
  if (!a.tsv.empty()) write_text(a.tsv, report_to_tsv(reports.front()));
  return kOk;
}

int cmd_synth(const SynthConfig& c, const std::string& dir) {
  const auto ds = gen_dataset(c);
  const fs::path out(dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ParseError("cannot create " + out.string() + ": " + ec.message());
  write_tsv(out / "features.tsv", ds.features);
  write_split(out / "split.json", ds.split);
  write_association(out / "associations.tsv", ds.associations);
  return kOk;
}

struct SynthCorpusArgs {
  std::string assoc, out, terms;
  std::size_t joint = 3, solo = 2, filler = 0;
  std::uint64_t seed = 0;
};

int cmd_synth_corpus(const SynthCorpusArgs& a) {
  const auto assoc = read_association(a.assoc);
  auto plan = corpus_plan_from_associations(assoc, a.joint, a.solo, a.seed);
  plan.filler_documents += a.filler;
  const auto docs = gen_corpus(plan);
  std::ofstream out(a.out, std::ios::binary);
  if (!out) throw ParseError("cannot write " + a.out);
  write_corpus_jsonl(out, docs);
  if (!a.terms.empty()) write_terms(a.terms, {assoc.categories().names(), assoc.attributes().names()});
  return kOk;
}

int cmd_pipeline(const std::string& config, const std::vector<std::string>& overrides, bool strict, std::ostream& out,
                 std::ostream& err) {
  const auto cfg = load_run_config(config, overrides);
  const auto result = run_pipeline(cfg);
  for (const auto& w : result.warnings) warn(err, w);
  out << cfg["output_dir"].get<std::string>() << "/report.json\n";
  if (!result.converged && strict) {
    diagnostic(err, "not_converged", "propagation did not converge", kNotConverged);
    return kNotConverged;
  }
  return kOk;
}

void add_train_options(CLI::App* cmd, TrainConfig& c) {
  cmd->add_option("--l2", c.l2, "L2 penalty")->capture_default_str();
  cmd->add_option("--lr", c.lr, "learning rate")->capture_default_str();
  cmd->add_option("--max-iters", c.max_iters, "gradient steps")->capture_default_str();
  cmd->add_option("--tol", c.tol, "gradient norm stopping threshold")->capture_default_str();
  cmd->add_option("--seed", c.seed, "initialization seed")->capture_default_str();
  cmd->add_option("--init-scale", c.init_scale, "std. dev. of random initial parameters")->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Zero- and few-shot category recognition through attribute transfer", "semtransfer"};
  app.require_subcommand(1);
  std::function<int()> action;

  MineArgs mine;
  auto* c_mine = app.add_subcommand("mine", "category x attribute relatedness from a corpus or taxonomy");
  c_mine->add_option("--corpus", mine.corpus, "JSON-lines corpus");
  c_mine->add_option("--taxonomy", mine.taxonomy, "child<TAB>parent edge list");
  c_mine->add_option("--probabilities", mine.probabilities, "node<TAB>probability file");
  c_mine->add_option("--measure", mine.measure, "dice_hit | dice_snippet | lin | esa | tfidf")->required();
  c_mine->add_option("--window", mine.window, "snippet window in tokens (default: whole document)");
  c_mine->add_option("--terms", mine.terms, "JSON with categories and attributes")->required();
  c_mine->add_option("-o,--out", mine.out, "relatedness TSV")->required();
  c_mine->callback([&] { action = [&] { return cmd_mine(mine); }; });

  AssocArgs assoc;
  auto* c_assoc = app.add_subcommand("assoc", "fuse relatedness matrices and binarize");
  c_assoc->add_option("-i,--in", assoc.inputs, "relatedness TSV (repeatable)")->required();
  c_assoc->add_option("--fusion", assoc.fusion, "classifier_fusion | expanded")->capture_default_str();
  c_assoc->add_option("--binarize", assoc.policy, "topk:K | threshold:T | mean | none")->capture_default_str();
  c_assoc->add_option("-o,--out", assoc.out, "association TSV")->required();
  c_assoc->callback([&] { action = [&] { return cmd_assoc(assoc); }; });

  TrainArgs train;
  auto* c_train = app.add_subcommand("train", "train attribute (or category) classifiers");
  c_train->add_option("--features", train.features)->required();
  c_train->add_option("--split", train.split)->required();
  c_train->add_option("--assoc", train.assoc, "association TSV (attribute targets)");
  c_train->add_option("--target", train.target, "attributes | categories")->capture_default_str();
  c_train->add_option("-o,--out", train.out, "model JSON")->required();
  add_train_options(c_train, train.config);
  c_train->callback([&] { action = [&] { return cmd_train(train, err); }; });

  std::string score_model, score_features, score_out;
  auto* c_score = app.add_subcommand("score", "apply a model to features");
  c_score->add_option("--model", score_model)->required();
  c_score->add_option("--features", score_features)->required();
  c_score->add_option("-o,--out", score_out)->required();
  c_score->callback([&] { action = [&] { return cmd_score(score_model, score_features, score_out); }; });

  ZeroShotArgs zs;
  auto* c_zs = app.add_subcommand("zeroshot", "score novel categories");
  c_zs->add_option("--method", zs.method, "dap | sim | hier")->capture_default_str();
  c_zs->add_option("--scores", zs.scores, "attribute scores (dap) or known-category scores (sim, hier)")->required();
  c_zs->add_option("--split", zs.split, "split JSON naming known and novel categories")->required();
  c_zs->add_option("--assoc", zs.assoc, "binary association TSV (dap)");
  c_zs->add_option("--prior", zs.prior, "empirical | uniform (dap)")->capture_default_str();
  c_zs->add_option("--relatedness", zs.relatedness, "novel x known relatedness TSV (sim)");
  c_zs->add_option("--top-k", zs.top_k, "known categories per novel one (sim)")->capture_default_str();
  c_zs->add_option("--taxonomy", zs.taxonomy, "edge list (hier)");
  c_zs->add_option("--mode", zs.mode, "leaf | inner | all (hier)")->capture_default_str();
  c_zs->add_option("-o,--out", zs.out)->required();
  c_zs->callback([&] { action = [&] { return cmd_zeroshot(zs); }; });

  PstArgs pa;
  auto* c_pst = app.add_subcommand("pst", "propagated semantic transfer over a kNN graph");
  c_pst->add_option("--zeroshot", pa.zeroshot, "zero-shot score TSV")->required();
  c_pst->add_option("--vectors", pa.vectors, "graph vectors, one row per instance")->required();
  c_pst->add_option("--split", pa.split, "split JSON whose fewshot labels are clamped");
  c_pst->add_flag("--softmax", pa.softmax, "treat zero-shot scores as log-posteriors and softmax rows first");
  c_pst->add_option("-k,--neighbors", pa.config.k)->capture_default_str();
  c_pst->add_option("--kernel", pa.kernel, "gaussian | cosine")->capture_default_str();
  c_pst->add_option("--sigma", pa.sigma, "gaussian bandwidth (default: median distance)");
  c_pst->add_option("--alpha", pa.config.alpha)->capture_default_str();
  c_pst->add_option("--tol", pa.config.tol)->capture_default_str();
  c_pst->add_option("--max-iters", pa.config.max_iters)->capture_default_str();
  c_pst->add_option("--rho", pa.config.seed_fraction, "seed fraction per category")->capture_default_str();
  c_pst->add_option("-o,--out", pa.out, "propagated score TSV")->required();
  c_pst->add_option("--predictions", pa.predictions, "prediction TSV");
  c_pst->add_option("--graph", pa.graph, "edge list TSV");
  c_pst->add_flag("--strict", pa.strict, "non-convergence is an error");
  c_pst->callback([&] { action = [&] { return cmd_pst(pa, err); }; });

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "AUC, accuracy and mean AP on the test split");
  c_eval->add_option("--scores", ev.scores)->required();
  c_eval->add_option("--split", ev.split)->required();
  c_eval->add_option("--protocol", ev.protocol, "novel_only | with_distractors | both")->capture_default_str();
  c_eval->add_flag("--map", ev.map, "also compute mean average precision");
  c_eval->add_option("-o,--out", ev.out, "report JSON (default: stdout)");
  c_eval->add_option("--tsv", ev.tsv, "per-category TSV of the first protocol");
  c_eval->callback([&] { action = [&] { return cmd_eval(ev, out); }; });

  SynthConfig sc;
  std::string synth_dir;
  auto* c_synth = app.add_subcommand("synth", "synthetic features, split and associations");
  c_synth->add_option("--n-known", sc.n_known)->capture_default_str();
  c_synth->add_option("--n-novel", sc.n_novel)->capture_default_str();
  c_synth->add_option("--attributes", sc.attributes)->capture_default_str();
  c_synth->add_option("--dim", sc.dim)->capture_default_str();
  c_synth->add_option("--train", sc.train_per_category, "train instances per known category")->capture_default_str();
  c_synth->add_option("--test", sc.test_per_category, "test instances per novel category")->capture_default_str();
  c_synth->add_option("--distractors", sc.distractors_per_category)->capture_default_str();
  c_synth->add_option("--fewshot", sc.fewshot_per_category)->capture_default_str();
  c_synth->add_option("--flip-noise", sc.flip_noise)->capture_default_str();
  c_synth->add_option("--cluster-scale", sc.cluster_scale)->capture_default_str();
  c_synth->add_option("--feature-noise", sc.feature_noise)->capture_default_str();
  c_synth->add_option("--seed", sc.seed)->capture_default_str();
  c_synth->add_option("-o,--out-dir", synth_dir)->required();
  c_synth->callback([&] { action = [&] { return cmd_synth(sc, synth_dir); }; });

  SynthCorpusArgs scorp;
  auto* c_sc = app.add_subcommand("synth-corpus", "corpus realizing an association matrix as co-occurrences");
  c_sc->add_option("--assoc", scorp.assoc)->required();
  c_sc->add_option("--joint", scorp.joint, "documents per associated pair")->capture_default_str();
  c_sc->add_option("--solo", scorp.solo, "extra documents per term")->capture_default_str();
  c_sc->add_option("--filler", scorp.filler, "additional filler-only documents")->capture_default_str();
  c_sc->add_option("--seed", scorp.seed)->capture_default_str();
  c_sc->add_option("--terms", scorp.terms, "write the terms JSON here");
  c_sc->add_option("-o,--out", scorp.out)->required();
  c_sc->callback([&] { action = [&] { return cmd_synth_corpus(scorp); }; });

  std::string config_path;
  std::vector<std::string> overrides;
  bool strict = false;
  auto* c_pipe = app.add_subcommand("pipeline", "run a whole experiment from a config file");
  c_pipe->add_option("config", config_path, "run config JSON")->required();
  c_pipe->add_option("--set", overrides, "dotted.key=value override (repeatable)");
  c_pipe->add_flag("--strict", strict, "non-convergence is an error");
  c_pipe->callback([&] { action = [&] { return cmd_pipeline(config_path, overrides, strict, out, err); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    diagnostic(err, "usage", e.what(), kParseFailure);
    return kParseFailure;
  }

  try {
    return action ? action() : kOk;
  } catch (const ParseError& e) {
    diagnostic(err, "parse", e.what(), kParseFailure);
    return kParseFailure;
  } catch (const ValidationError& e) {
    diagnostic(err, "validation", e.what(), kValidationFailure);
    return kValidationFailure;
  } catch (const nlohmann::json::exception& e) {
    diagnostic(err, "parse", e.what(), kParseFailure);
    return kParseFailure;
  }
}

}  // namespace semtransfer::cli
