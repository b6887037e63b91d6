#include "pipeline.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include "semtransfer/association.hpp"
#include "semtransfer/classify.hpp"
#include "semtransfer/corpus.hpp"
#include "semtransfer/error.hpp"
#include "semtransfer/eval.hpp"
#include "semtransfer/taxonomy.hpp"
#include "semtransfer/transfer.hpp"
#include "semtransfer/tsv.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace semtransfer::cli {

namespace {

const char* const kPathKeys[] = {
    "output_dir",
    "data.features",
    "data.split",
    "associations.file",
    "associations.corpus",
    "associations.taxonomy_edges",
    "associations.taxonomy_probabilities",
    "associations.terms",
    "transfer.relatedness_file",
    "transfer.taxonomy_edges",
};

json synth_defaults() {
  const SynthConfig c;
  return json{{"n_known", c.n_known},
              {"n_novel", c.n_novel},
              {"attributes", c.attributes},
              {"dim", c.dim},
              {"train_per_category", c.train_per_category},
              {"test_per_category", c.test_per_category},
              {"distractors_per_category", c.distractors_per_category},
              {"fewshot_per_category", c.fewshot_per_category},
              {"flip_noise", c.flip_noise},
              {"cluster_scale", c.cluster_scale},
              {"feature_noise", c.feature_noise},
              {"seed", c.seed}};
}

std::string type_name(const json& j) {
  if (j.is_number()) return "number";
  return j.type_name();
}

// Values whose default is null may be a string, a number or null.
void merge_strict(json& into, const nlohmann::json& user, const std::string& where) {
  if (!user.is_object()) throw ParseError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : user.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!into.contains(key)) throw ParseError("config: unknown key '" + path + "'");
    auto& slot = into[key];
    if (slot.is_object()) {
      merge_strict(slot, value, path);
      continue;
    }
    if (slot.is_null()) {
      if (!(value.is_null() || value.is_string() || value.is_number())) {
        throw ParseError("config: '" + path + "' must be a string, a number or null");
      }
    } else if (type_name(slot) != type_name(value)) {
      throw ParseError("config: '" + path + "' must be a " + type_name(slot) + ", got " + type_name(value));
    }
    if (slot.is_array()) {
      for (const auto& v : value) {
        if (!v.is_string()) throw ParseError("config: '" + path + "' must hold strings");
      }
    }
    slot = value;
  }
}

void apply_override(nlohmann::json& user, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ParseError("override '" + assignment + "' is not key=value");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  nlohmann::json* node = &user;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ParseError("override '" + assignment + "' has an empty key segment");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    auto& next = (*node)[part];
    if (next.is_null()) next = nlohmann::json::object();
    if (!next.is_object()) throw ParseError("override '" + assignment + "': '" + part + "' is not an object");
    node = &next;
    start = dot + 1;
  }
}

json* find_path(json& root, const std::string& dotted) {
  json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const auto part = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->contains(part)) return nullptr;
    node = &(*node)[part];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

std::size_t count(const json& j, const char* what) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    throw ValidationError(std::string(what) + " must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::optional<fs::path> opt_path(const json& j) {
  if (j.is_null()) return std::nullopt;
  if (!j.is_string()) throw ParseError("expected a path string");
  return fs::path(j.get<std::string>());
}

fs::path need_path(const json& j, const char* key) {
  auto p = opt_path(j);
  if (!p) throw ValidationError(std::string(key) + " is required");
  return *p;
}

std::string prefixed(const char* stage, const char* what) {
  const std::string head = std::string(stage) + ": ";
  return std::string_view(what).starts_with(head) ? what : head + what;
}

template <class F>
auto stage(const char* name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw ParseError(prefixed(name, e.what()));
  } catch (const ValidationError& e) {
    throw ValidationError(prefixed(name, e.what()));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(prefixed(name, e.what()));
  }
}

Registry registry_of(const LabelMap& labels) {
  Registry r;
  for (const auto& [id, cat] : labels) r.add(id);
  return r;
}

LabeledMatrix select_rows(const LabeledMatrix& m, const Registry& rows) {
  LabeledMatrix out{rows, m.cols, Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), m.values.cols())};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.values.row(static_cast<Eigen::Index>(r)) = m.values.row(static_cast<Eigen::Index>(m.rows.index(rows.name(r))));
  }
  return out;
}

RelatednessMatrix reorder(const RelatednessMatrix& m, const Registry& rows, const Registry& cols) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!m.rows.contains(rows.name(r))) throw ValidationError("no relatedness row for '" + rows.name(r) + "'");
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (!m.cols.contains(cols.name(c))) throw ValidationError("no relatedness column for '" + cols.name(c) + "'");
      v(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.at(rows.name(r), cols.name(c));
    }
  }
  return RelatednessMatrix::create(rows, cols, std::move(v), m.measure);
}

// Cosine between association rows, used as category-category relatedness.
RelatednessMatrix association_cosine(const AssociationMatrix& assoc, const Registry& novel, const Registry& known) {
  Eigen::MatrixXd v(static_cast<Eigen::Index>(novel.size()), static_cast<Eigen::Index>(known.size()));
  for (std::size_t z = 0; z < novel.size(); ++z) {
    const Eigen::VectorXd a = assoc.values.row(static_cast<Eigen::Index>(assoc.rows.index(novel.name(z))));
    for (std::size_t y = 0; y < known.size(); ++y) {
      const Eigen::VectorXd b = assoc.values.row(static_cast<Eigen::Index>(assoc.rows.index(known.name(y))));
      const double den = a.norm() * b.norm();
      v(static_cast<Eigen::Index>(z), static_cast<Eigen::Index>(y)) = den > 0.0 ? std::max(0.0, a.dot(b) / den) : 0.0;
    }
  }
  return RelatednessMatrix::create(novel, known, std::move(v), Measure::Fused);
}

CategoryScoreMatrix as_category_scores(const AttributeScoreMatrix& s) {
  return CategoryScoreMatrix::create(s.rows, s.cols, s.values, false);
}

void add_map_metrics(EvalReport& report, const CategoryScoreMatrix& scores, const LabelMap& truth,
                     const DatasetSplit& split) {
  Registry rows;
  const auto novel = split.novel_registry();
  for (const auto& id : scores.instances().names()) {
    const auto t = truth.find(id);
    if (t == truth.end()) continue;
    if (report.protocol == Protocol::NovelOnly && !novel.contains(t->second)) continue;
    rows.add(id);
  }
  report.average_precision.clear();
  report.mean_ap = mean_ap(scores.select_instances(rows), truth, &report.average_precision);
  report.has_ap = true;
}

}  // namespace

nlohmann::ordered_json default_run_config() {
  return json{
      {"output_dir", "out"},
      {"data", {{"source", "synth"}, {"features", nullptr}, {"split", nullptr}, {"synth", synth_defaults()}}},
      {"associations",
       {{"source", "ground_truth"},
        {"file", nullptr},
        {"corpus", nullptr},
        {"taxonomy_edges", nullptr},
        {"taxonomy_probabilities", nullptr},
        {"terms", nullptr},
        {"measures", json::array({"dice_hit"})},
        {"window", nullptr},
        {"fusion", "classifier_fusion"},
        {"binarize", "mean"},
        {"synth_corpus", {{"joint_documents", 3}, {"solo_documents", 2}, {"seed", 0}}}}},
      {"train",
       {{"l2", 1e-3}, {"lr", 0.1}, {"max_iters", 2000}, {"tol", 1e-6}, {"seed", 0}, {"init_scale", 0.0}}},
      {"transfer",
       {{"method", "dap"},
        {"prior", "empirical"},
        {"top_k", 3},
        {"relatedness", "associations"},
        {"relatedness_file", nullptr},
        {"hierarchy_mode", "inner"},
        {"taxonomy_edges", nullptr}}},
      {"propagation",
       {{"enabled", true},
        {"k", 10},
        {"kernel", "gaussian"},
        {"sigma", nullptr},
        {"alpha", 0.8},
        {"tol", 1e-6},
        {"max_iters", 1000},
        {"seed_fraction", 0.05},
        {"seed_transform", "softmax"},
        {"fewshot", true}}},
      {"eval", {{"protocols", json::array({"novel_only", "with_distractors"})}, {"mean_ap", true}}},
  };
}

nlohmann::ordered_json resolve_run_config(const nlohmann::json& user, const std::vector<std::string>& overrides,
                                          const fs::path& base_dir) {
  nlohmann::json patched = user.is_null() ? nlohmann::json::object() : user;
  for (const auto& o : overrides) apply_override(patched, o);
  json config = default_run_config();
  merge_strict(config, patched, "");
  for (const char* key : kPathKeys) {
    json* node = find_path(config, key);
    if (node && node->is_string()) {
      fs::path p(node->get<std::string>());
      if (p.is_relative()) p = base_dir / p;
      *node = p.lexically_normal().string();
    }
  }
  return config;
}

nlohmann::ordered_json load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config " + path.string());
  nlohmann::json user;
  try {
    user = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what());
  }
  const auto base = fs::absolute(path).parent_path();
  return resolve_run_config(user, overrides, base);
}

SynthConfig synth_config_from_json(const nlohmann::json& j) {
  SynthConfig c;
  auto get_count = [&](const char* key, std::size_t& slot) {
    if (j.contains(key)) slot = count(j[key], key);
  };
  get_count("n_known", c.n_known);
  get_count("n_novel", c.n_novel);
  get_count("attributes", c.attributes);
  get_count("dim", c.dim);
  get_count("train_per_category", c.train_per_category);
  get_count("test_per_category", c.test_per_category);
  get_count("distractors_per_category", c.distractors_per_category);
  get_count("fewshot_per_category", c.fewshot_per_category);
  if (j.contains("flip_noise")) c.flip_noise = j["flip_noise"].get<double>();
  if (j.contains("cluster_scale")) c.cluster_scale = j["cluster_scale"].get<double>();
  if (j.contains("feature_noise")) c.feature_noise = j["feature_noise"].get<double>();
  if (j.contains("seed")) c.seed = count(j["seed"], "seed");
  c.check();
  return c;
}

PropagationConfig propagation_config_from_json(const nlohmann::json& j) {
  PropagationConfig c;
  if (j.contains("k")) c.k = count(j["k"], "k");
  if (j.contains("kernel")) c.kernel.type = parse_kernel(j["kernel"].get<std::string>());
  if (j.contains("sigma") && !j["sigma"].is_null()) {
    const double s = j["sigma"].get<double>();
    if (!(s > 0.0)) throw ValidationError("sigma must be positive");
    c.kernel.sigma = s;
  }
  if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
  if (j.contains("tol")) c.tol = j["tol"].get<double>();
  if (j.contains("max_iters")) c.max_iters = count(j["max_iters"], "max_iters");
  if (j.contains("seed_fraction")) c.seed_fraction = j["seed_fraction"].get<double>();
  c.check();
  return c;
}

Terms read_terms(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open terms file " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("terms " + path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ParseError("terms: expected an object");
  Terms t;
  for (const auto& [key, value] : j.items()) {
    std::vector<std::string>* slot = nullptr;
    if (key == "categories") slot = &t.categories;
    else if (key == "attributes") slot = &t.attributes;
    else throw ParseError("terms: unknown key '" + key + "'");
    if (!value.is_array()) throw ParseError("terms: '" + key + "' must be an array");
    for (const auto& v : value) {
      if (!v.is_string()) throw ParseError("terms: '" + key + "' must hold strings");
      slot->push_back(v.get<std::string>());
    }
  }
  return t;
}

void write_terms(const fs::path& path, const Terms& terms) {
  write_text(path, json{{"categories", terms.categories}, {"attributes", terms.attributes}}.dump(2) + "\n");
}

void write_predictions(const fs::path& path, const Registry& instances, const Registry& categories,
                       const std::vector<std::size_t>& predicted) {
  std::ostringstream out;
  out << "\tprediction\n";
  for (std::size_t i = 0; i < instances.size(); ++i) out << instances.name(i) << '\t' << categories.name(predicted[i]) << '\n';
  write_text(path, out.str());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
  if (!out) throw ParseError("cannot write " + path.string());
}

PipelineResult run_pipeline(const nlohmann::ordered_json& config) {
  PipelineResult result;
  const auto& dcfg = config["data"];
  const auto& acfg = config["associations"];
  const auto& tcfg = config["train"];
  const auto& xcfg = config["transfer"];
  const auto& pcfg = config["propagation"];
  const auto& ecfg = config["eval"];

  // Fail on bad settings before any work is done.
  const auto pconf = stage("propagation", [&] { return propagation_config_from_json(pcfg); });
  const auto tconf = stage("train", [&] {
    TrainConfig t;
    t.l2 = tcfg["l2"].get<double>();
    t.lr = tcfg["lr"].get<double>();
    t.max_iters = count(tcfg["max_iters"], "max_iters");
    t.tol = tcfg["tol"].get<double>();
    t.seed = count(tcfg["seed"], "seed");
    t.init_scale = tcfg["init_scale"].get<double>();
    if (!(t.l2 >= 0.0) || !(t.lr > 0.0) || !(t.tol > 0.0) || !(t.init_scale >= 0.0)) {
      throw ValidationError("l2 and init_scale must be non-negative, lr and tol positive");
    }
    return t;
  });
  const auto method = stage("transfer", [&] {
    const auto m = xcfg["method"].get<std::string>();
    if (m != "dap" && m != "sim" && m != "hier") throw ValidationError("unknown method '" + m + "'");
    if (count(xcfg["top_k"], "top_k") < 1) throw ValidationError("top_k must be at least 1");
    (void)parse_hierarchy_mode(xcfg["hierarchy_mode"].get<std::string>());
    return m;
  });
  const auto protocols = stage("evaluate", [&] {
    std::vector<Protocol> ps;
    for (const auto& p : ecfg["protocols"]) ps.push_back(parse_protocol(p.get<std::string>()));
    return ps;
  });

  const fs::path out_dir = config["output_dir"].get<std::string>();
  stage("output", [&] {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw ParseError("cannot create " + out_dir.string() + ": " + ec.message());
    write_text(out_dir / "config.json", config.dump(2) + "\n");
  });

  FeatureMatrix features;
  DatasetSplit split;
  LabelMap truth;
  std::optional<AssociationMatrix> ground_truth;
  stage("data", [&] {
    const auto source = dcfg["source"].get<std::string>();
    if (source == "synth") {
      auto ds = gen_dataset(synth_config_from_json(dcfg["synth"]));
      write_tsv(out_dir / "features.tsv", ds.features);
      write_split(out_dir / "split.json", ds.split);
      write_association(out_dir / "ground_truth.tsv", ds.associations);
      features = std::move(ds.features);
      split = std::move(ds.split);
      truth = std::move(ds.labels);
      ground_truth = std::move(ds.associations);
    } else if (source == "files") {
      features = read_features(need_path(dcfg["features"], "data.features"));
      split = read_split(need_path(dcfg["split"], "data.split"));
      for (const auto* m : {&split.train, &split.test, &split.fewshot}) truth.insert(m->begin(), m->end());
    } else {
      throw ValidationError("unknown data source '" + source + "'");
    }
  });

  Registry categories(split.known_categories);
  for (const auto& c : split.novel_categories) {
    if (!categories.contains(c)) categories.add(c);
  }
  const auto known = split.known_registry();
  const auto novel = split.novel_registry();

  std::optional<std::vector<Document>> corpus_docs;
  std::optional<CorpusIndex> corpus_index;
  std::optional<Taxonomy> mining_taxonomy;
  auto load_mining_resources = [&] {
    if (corpus_docs) return;
    if (auto p = opt_path(acfg["corpus"])) {
      corpus_docs = read_corpus_jsonl(*p);
    } else if (ground_truth) {
      const auto& sc = acfg["synth_corpus"];
      auto plan = corpus_plan_from_associations(*ground_truth, count(sc["joint_documents"], "joint_documents"),
                                                count(sc["solo_documents"], "solo_documents"),
                                                count(sc["seed"], "seed"));
      corpus_docs = gen_corpus(plan);
      std::ofstream out(out_dir / "corpus.jsonl", std::ios::binary);
      if (!out) throw ParseError("cannot write corpus.jsonl");
      write_corpus_jsonl(out, *corpus_docs);
    } else {
      throw ValidationError("associations.corpus is required for mining");
    }
    corpus_index = CorpusIndex::build(*corpus_docs);
    if (auto edges = opt_path(acfg["taxonomy_edges"])) {
      mining_taxonomy = read_taxonomy(*edges, opt_path(acfg["taxonomy_probabilities"]));
    }
  };
  auto mining_sources = [&] {
    RelatednessSources src;
    src.corpus = corpus_index ? &*corpus_index : nullptr;
    src.taxonomy = mining_taxonomy ? &*mining_taxonomy : nullptr;
    if (!acfg["window"].is_null()) src.window = count(acfg["window"], "window");
    return src;
  };

  // Association matrix before binarization: either final or soft.
  std::optional<RelatednessMatrix> soft;
  AssociationMatrix assoc;
  stage("mine", [&] {
    const auto source = acfg["source"].get<std::string>();
    if (source == "ground_truth") {
      if (!ground_truth) throw ValidationError("ground_truth associations need synthetic data");
      assoc = ground_truth->select_categories(categories);
    } else if (source == "file") {
      auto a = read_association(need_path(acfg["file"], "associations.file"));
      if (a.binary) {
        assoc = a.select_categories(categories);
      } else {
        auto sel = a.select_categories(categories);
        soft = RelatednessMatrix::create(sel.rows, sel.cols, sel.values, Measure::Fused);
      }
    } else if (source == "mine") {
      load_mining_resources();
      Registry attributes;
      if (auto tp = opt_path(acfg["terms"])) {
        attributes = Registry(read_terms(*tp).attributes);
      } else if (ground_truth) {
        attributes = ground_truth->attributes();
      } else {
        throw ValidationError("associations.terms is required to mine without synthetic data");
      }
      std::vector<RelatednessMatrix> mined;
      for (const auto& name : acfg["measures"]) {
        const auto measure = parse_measure(name.get<std::string>());
        RelatednessMatrix rel;
        if (measure == Measure::Tfidf) {
          const auto scripts = group_scripts(*corpus_docs);
          rel = reorder(tfidf_associations(scripts, attributes), categories, attributes);
        } else {
          rel = compute_relatedness(measure, mining_sources(), categories, attributes);
        }
        write_relatedness(out_dir / ("relatedness_" + to_string(measure) + ".tsv"), rel);
        mined.push_back(std::move(rel));
      }
      if (mined.empty()) throw ValidationError("associations.measures is empty");
      soft = fuse_measures(mined, parse_fusion_mode(acfg["fusion"].get<std::string>()));
      write_relatedness(out_dir / "relatedness_fused.tsv", *soft);
    } else {
      throw ValidationError("unknown association source '" + source + "'");
    }
  });

  stage("binarize", [&] {
    if (soft) {
      const auto policy = acfg["binarize"].get<std::string>();
      if (policy == "none") throw ValidationError("soft associations need a binarize policy for transfer");
      assoc = binarize(*soft, BinarizePolicy::parse(policy));
    }
    write_association(out_dir / "associations.tsv", assoc);
    for (const auto& w : assoc.warnings()) result.warnings.push_back("associations: " + w);
    const auto violations = validate_split(split, assoc);
    if (!violations.empty()) {
      std::string msg = "invalid split";
      for (const auto& v : violations) msg += "; " + v.message;
      throw ValidationError(msg);
    }
  });

  const auto model = stage("train", [&] {
    auto m = train_attribute_classifiers(features, split.train, assoc, tconf);
    save_model(out_dir / "model.json", m);
    for (const auto& a : m.degenerate_attributes()) result.warnings.push_back("train: degenerate attribute " + a);
    return m;
  });

  const auto attribute_scores = stage("score", [&] {
    auto s = predict_attribute_scores(model, features);
    write_tsv(out_dir / "attribute_scores.tsv", s);
    return s;
  });

  const auto zero_shot = stage("transfer", [&] {
    CategoryScoreMatrix zs;
    if (method == "dap") {
      const auto known_assoc = assoc.select_categories(known);
      const auto prior_name = xcfg["prior"].get<std::string>();
      AttributePrior prior;
      if (prior_name == "empirical") prior = AttributePrior::empirical(known_assoc);
      else if (prior_name == "uniform") prior = AttributePrior::uniform(assoc.attributes());
      else throw ValidationError("unknown prior '" + prior_name + "'");
      zs = dap_scores(attribute_scores, assoc.select_categories(novel), prior);
    } else {
      const auto cmodel = train_category_classifiers(features, split.train, known, tconf);
      save_model(out_dir / "category_model.json", cmodel);
      const auto known_scores = as_category_scores(predict_attribute_scores(cmodel, features));
      write_category_scores(out_dir / "known_scores.tsv", known_scores);
      if (method == "sim") {
        const auto how = xcfg["relatedness"].get<std::string>();
        RelatednessMatrix rel;
        if (how == "associations") {
          rel = association_cosine(assoc, novel, known);
        } else if (how == "file") {
          rel = reorder(read_relatedness(need_path(xcfg["relatedness_file"], "transfer.relatedness_file")), novel, known);
        } else if (how == "mine") {
          load_mining_resources();
          const auto measure = parse_measure(acfg["measures"].at(0).get<std::string>());
          rel = compute_relatedness(measure, mining_sources(), novel, known);
        } else {
          throw ValidationError("unknown relatedness source '" + how + "'");
        }
        write_relatedness(out_dir / "category_relatedness.tsv", rel);
        zs = direct_similarity_scores(known_scores, rel, count(xcfg["top_k"], "top_k"));
      } else {
        const auto tax = read_taxonomy(need_path(xcfg["taxonomy_edges"], "transfer.taxonomy_edges"), std::nullopt);
        zs = hierarchy_transfer(tax, known_scores, novel, parse_hierarchy_mode(xcfg["hierarchy_mode"].get<std::string>()));
      }
    }
    write_category_scores(out_dir / "zeroshot_scores.tsv", zs);
    return zs;
  });

  const auto test = registry_of(split.test);
  std::optional<PstResult> propagated;
  if (pcfg["enabled"].get<bool>()) {
    stage("propagation", [&] {
      Registry nodes = test;
      LabelMap fewshot;
      if (pcfg["fewshot"].get<bool>()) {
        for (const auto& [id, cat] : split.fewshot) {
          nodes.add(id);
          fewshot.emplace(id, cat);
        }
      }
      const auto transform = pcfg["seed_transform"].get<std::string>();
      if (transform != "softmax" && transform != "none") throw ValidationError("unknown seed_transform '" + transform + "'");
      const auto seeds_from = transform == "softmax" ? softmax_rows(zero_shot) : zero_shot;
      propagated = pst(seeds_from, select_rows(attribute_scores, nodes), fewshot, pconf);
      write_graph_tsv(out_dir / "graph.tsv", propagated->graph);
      write_category_scores(out_dir / "pst_scores.tsv", propagated->scores);
      if (!propagated->converged) {
        result.converged = false;
        result.warnings.push_back("propagation: no convergence after " + std::to_string(propagated->iterations) +
                                  " iterations");
      }
    });
  }

  stage("evaluate", [&] {
    auto evaluate = [&](const CategoryScoreMatrix& scores) {
      const auto rows = scores.select_instances(test);
      std::vector<EvalReport> reports;
      for (const auto p : protocols) {
        auto r = evaluate_zero_shot(rows, truth, split, p);
        if (ecfg["mean_ap"].get<bool>()) add_map_metrics(r, rows, truth, split);
        reports.push_back(std::move(r));
      }
      return json::parse(reports_to_json(reports))["reports"];
    };
    json report;
    report["method"] = method;
    report["zero_shot"] = evaluate(zero_shot);
    const auto final_scores = propagated ? propagated->scores.select_instances(test) : zero_shot.select_instances(test);
    if (propagated) {
      report["pst"] = {{"iterations", propagated->iterations},
                       {"converged", propagated->converged},
                       {"reports", evaluate(propagated->scores)}};
    }
    std::vector<std::size_t> predicted(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      predicted[i] = static_cast<std::size_t>(argmax_first(final_scores.values.row(static_cast<Eigen::Index>(i)).transpose()));
    }
    write_predictions(out_dir / "predictions.tsv", test, final_scores.categories(), predicted);
    report["warnings"] = result.warnings;
    write_text(out_dir / "report.json", report.dump(2) + "\n");
    result.report = std::move(report);
  });
  return result;
}

}  // namespace semtransfer::cli
