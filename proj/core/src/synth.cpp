#include "semtransfer/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "semtransfer/error.hpp"
#include "semtransfer/rng.hpp"
#include "semtransfer/text.hpp"

namespace semtransfer {

void SynthConfig::check() const {
  if (n_known < 1 || n_novel < 1 || attributes < 1 || dim < 1) {
    throw ValidationError("synth: category, attribute and dimension counts must be at least 1");
  }
  if (train_per_category < 1 || test_per_category < 1) {
    throw ValidationError("synth: per-category instance counts must be at least 1");
  }
  if (!(flip_noise >= 0.0 && flip_noise < 1.0)) throw ValidationError("synth: flip_noise must lie in [0,1)");
  if (!(cluster_scale >= 0.0) || !(feature_noise >= 0.0)) throw ValidationError("synth: noise scales must be non-negative");
}

namespace {

std::string padded(const char* prefix, std::size_t i, int width) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
  return buf;
}

}  // namespace

SynthDataset gen_dataset(const SynthConfig& cfg) {
  cfg.check();
  const std::size_t n_cat = cfg.n_known + cfg.n_novel;
  const std::size_t m = cfg.attributes;
  if (m < 64 && (std::uint64_t{1} << m) < n_cat) {
    throw ValidationError("synth: 2^" + std::to_string(m) + " signatures cannot cover " + std::to_string(n_cat) + " categories");
  }
  Rng rng(cfg.seed);

  Registry categories;
  for (std::size_t c = 0; c < cfg.n_known; ++c) categories.add(padded("known", c, 2));
  for (std::size_t c = 0; c < cfg.n_novel; ++c) categories.add(padded("novel", c, 2));
  Registry attributes;
  for (std::size_t a = 0; a < m; ++a) attributes.add(padded("attr", a, 2));

  Eigen::MatrixXd sig(n_cat, m);
  std::set<std::vector<bool>> used;
  for (std::size_t c = 0; c < n_cat; ++c) {
    std::vector<bool> bits(m);
    do {
      for (std::size_t a = 0; a < m; ++a) bits[a] = rng.bernoulli(0.5);
    } while (!used.insert(bits).second);
    for (std::size_t a = 0; a < m; ++a) sig(c, a) = bits[a] ? 1.0 : 0.0;
  }

  const std::size_t d = cfg.dim;
  Eigen::MatrixXd offsets = Eigen::MatrixXd::Zero(n_cat, d);
  if (cfg.cluster_scale > 0.0) {
    for (std::size_t c = 0; c < n_cat; ++c) {
      for (std::size_t k = 0; k < d; ++k) offsets(c, k) = cfg.cluster_scale * rng.normal();
    }
  }
  Eigen::MatrixXd embed = Eigen::MatrixXd::Zero(m, d);  // signature -> feature
  if (d >= m) {
    embed.leftCols(m).setIdentity();
  } else {
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t k = 0; k < d; ++k) embed(a, k) = rng.normal() / std::sqrt(static_cast<double>(d));
    }
  }

  struct Pending {
    std::size_t category;
    enum { Train, Test, Fewshot } role;
  };
  std::vector<Pending> plan;
  for (std::size_t c = 0; c < cfg.n_known; ++c) {
    for (std::size_t i = 0; i < cfg.train_per_category; ++i) plan.push_back({c, Pending::Train});
  }
  for (std::size_t c = cfg.n_known; c < n_cat; ++c) {
    for (std::size_t i = 0; i < cfg.test_per_category; ++i) plan.push_back({c, Pending::Test});
  }
  for (std::size_t c = 0; c < cfg.n_known; ++c) {
    for (std::size_t i = 0; i < cfg.distractors_per_category; ++i) plan.push_back({c, Pending::Test});
  }
  for (std::size_t c = cfg.n_known; c < n_cat; ++c) {
    for (std::size_t i = 0; i < cfg.fewshot_per_category; ++i) plan.push_back({c, Pending::Fewshot});
  }

  SynthDataset out;
  Registry instances;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(plan.size()), static_cast<Eigen::Index>(d));
  Eigen::RowVectorXd bits(m);
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const auto c = static_cast<Eigen::Index>(plan[i].category);
    for (std::size_t a = 0; a < m; ++a) {
      const bool flip = cfg.flip_noise > 0.0 && rng.bernoulli(cfg.flip_noise);
      bits[a] = flip ? 1.0 - sig(c, a) : sig(c, a);
    }
    Eigen::RowVectorXd row = bits * embed + offsets.row(c);
    if (cfg.feature_noise > 0.0) {
      for (std::size_t k = 0; k < d; ++k) row[k] += cfg.feature_noise * rng.normal();
    }
    x.row(static_cast<Eigen::Index>(i)) = row;

    const std::string id = padded("x", i, 5);
    instances.add(id);
    const std::string& cat = categories.name(plan[i].category);
    out.labels.emplace(id, cat);
    switch (plan[i].role) {
      case Pending::Train: out.split.train.emplace(id, cat); break;
      case Pending::Test: out.split.test.emplace(id, cat); break;
      case Pending::Fewshot: out.split.fewshot.emplace(id, cat); break;
    }
  }
  for (std::size_t c = 0; c < n_cat; ++c) {
    (c < cfg.n_known ? out.split.known_categories : out.split.novel_categories).push_back(categories.name(c));
  }
  out.features = FeatureMatrix::create(std::move(instances), std::move(x));
  out.associations = AssociationMatrix::create(std::move(categories), std::move(attributes), std::move(sig), true);
  return out;
}

std::vector<Document> gen_corpus(const CorpusPlan& plan) {
  std::map<std::string, std::size_t> marginal;
  std::map<std::string, std::size_t> used;
  std::set<std::string> category_names, attribute_names;
  auto register_term = [&](const CorpusPlan::Term& t, std::set<std::string>& group) {
    const auto toks = tokenize(t.name);
    if (toks.size() != 1 || toks.front() != t.name) {
      throw ValidationError("corpus plan: term '" + t.name + "' is not a single lowercase token");
    }
    if (t.name.starts_with("filler")) throw ValidationError("corpus plan: term '" + t.name + "' collides with filler words");
    if (!marginal.emplace(t.name, t.documents).second) throw ValidationError("corpus plan: duplicate term '" + t.name + "'");
    group.insert(t.name);
  };
  for (const auto& t : plan.categories) register_term(t, category_names);
  for (const auto& t : plan.attributes) register_term(t, attribute_names);

  std::set<std::pair<std::string, std::string>> seen_pairs;
  for (const auto& j : plan.joints) {
    if (!category_names.contains(j.category) || !attribute_names.contains(j.attribute)) {
      throw ValidationError("corpus plan: joint (" + j.category + ", " + j.attribute + ") names an unplanned term");
    }
    if (!seen_pairs.emplace(j.category, j.attribute).second) {
      throw ValidationError("corpus plan: duplicate joint (" + j.category + ", " + j.attribute + ")");
    }
    used[j.category] += j.documents;
    used[j.attribute] += j.documents;
  }
  for (const auto& [term, n] : used) {
    if (n > marginal[term]) {
      throw ValidationError("infeasible corpus plan: joints of '" + term + "' need " + std::to_string(n) +
                            " documents but its marginal is " + std::to_string(marginal[term]));
    }
  }

  std::vector<std::vector<std::string>> docs;
  for (const auto& j : plan.joints) {
    for (std::size_t k = 0; k < j.documents; ++k) docs.push_back({j.category, j.attribute});
  }
  for (const auto* group : {&plan.categories, &plan.attributes}) {
    for (const auto& t : *group) {
      for (std::size_t k = used[t.name]; k < t.documents; ++k) docs.push_back({t.name});
    }
  }
  for (std::size_t k = 0; k < plan.filler_documents; ++k) docs.emplace_back();

  Rng rng(plan.seed);
  const std::size_t filler_vocab = 50;
  for (auto& words : docs) {
    for (std::size_t k = 0; k < plan.filler_tokens; ++k) {
      words.push_back("filler" + std::to_string(rng.below(filler_vocab)));
    }
    rng.shuffle(words);
  }
  rng.shuffle(docs);

  std::vector<Document> out;
  out.reserve(docs.size());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::string text;
    for (const auto& w : docs[i]) {
      if (!text.empty()) text += ' ';
      text += w;
    }
    out.push_back({padded("doc", i, 6), std::move(text), {}});
  }
  return out;
}

double planned_dice(const CorpusPlan& plan, const std::string& a, const std::string& b) {
  auto marginal = [&](const std::string& t) -> std::size_t {
    for (const auto* group : {&plan.categories, &plan.attributes}) {
      for (const auto& term : *group) {
        if (term.name == t) return term.documents;
      }
    }
    throw ValidationError("corpus plan: unknown term '" + t + "'");
  };
  const std::size_t ha = marginal(a), hb = marginal(b);
  if (ha == 0 || hb == 0) return 0.0;
  std::size_t joint = 0;
  if (a == b) {
    joint = ha;
  } else {
    for (const auto& j : plan.joints) {
      if ((j.category == a && j.attribute == b) || (j.category == b && j.attribute == a)) joint = j.documents;
    }
  }
  return 2.0 * static_cast<double>(joint) / static_cast<double>(ha + hb);
}

CorpusPlan corpus_plan_from_associations(const AssociationMatrix& assoc, std::size_t joint_documents,
                                         std::size_t solo_documents, std::uint64_t seed) {
  CorpusPlan plan;
  plan.seed = seed;
  std::vector<std::size_t> cat_total(assoc.categories().size(), solo_documents);
  std::vector<std::size_t> attr_total(assoc.attributes().size(), solo_documents);
  for (Eigen::Index c = 0; c < assoc.values.rows(); ++c) {
    for (Eigen::Index a = 0; a < assoc.values.cols(); ++a) {
      if (assoc.values(c, a) >= 0.5) {
        plan.joints.push_back({assoc.categories().name(c), assoc.attributes().name(a), joint_documents});
        cat_total[c] += joint_documents;
        attr_total[a] += joint_documents;
      }
    }
  }
  for (std::size_t c = 0; c < cat_total.size(); ++c) plan.categories.push_back({assoc.categories().name(c), cat_total[c]});
  for (std::size_t a = 0; a < attr_total.size(); ++a) plan.attributes.push_back({assoc.attributes().name(a), attr_total[a]});
  plan.filler_documents = solo_documents;
  return plan;
}

}  // namespace semtransfer
