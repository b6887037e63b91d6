#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semtransfer/corpus.hpp"
#include "semtransfer/matrix.hpp"
#include "semtransfer/split.hpp"

namespace semtransfer {

struct SynthConfig {
  std::size_t n_known = 30;
  std::size_t n_novel = 2;
  std::size_t attributes = 16;
  std::size_t dim = 16;
  std::size_t train_per_category = 60;
  std::size_t test_per_category = 50;
  std::size_t distractors_per_category = 0;  // known-category test instances
  std::size_t fewshot_per_category = 0;      // novel instances outside the test set
  double flip_noise = 0.2;       // per-instance attribute flip probability
  double cluster_scale = 0.4;    // std. dev. of the per-category feature offset
  double feature_noise = 0.2;    // std. dev. of per-instance Gaussian noise
  std::uint64_t seed = 0;

  void check() const;
};

struct SynthDataset {
  FeatureMatrix features;
  LabelMap labels;                 // every instance
  AssociationMatrix associations;  // ground-truth signatures, known then novel
  DatasetSplit split;
};

/// Categories get pairwise distinct random binary signatures. An instance's
/// features are its category signature (bits flipped with flip_noise)
/// embedded in `dim` dimensions, plus the category offset, plus noise. For
/// dim >= attributes the embedding is the identity on the leading dimensions;
/// otherwise a fixed random projection. Pure function of the config.
SynthDataset gen_dataset(const SynthConfig& config);

struct CorpusPlan {
  struct Term {
    std::string name;
    std::size_t documents = 0;
  };
  struct Joint {
    std::string category;
    std::string attribute;
    std::size_t documents = 0;
  };
  std::vector<Term> categories;
  std::vector<Term> attributes;
  std::vector<Joint> joints;
  std::size_t filler_documents = 0;
  std::size_t filler_tokens = 4;  // filler words per document
  std::uint64_t seed = 0;
};

/// Corpus in which every planned term occurs in exactly its planned number of
/// documents and each (category, attribute) pair co-occurs in exactly its
/// joint count. Names must be single tokens. Throws ValidationError when a
/// term's joints exceed its marginal.
std::vector<Document> gen_corpus(const CorpusPlan& plan);

/// Dice coefficient the plan implies for two planned terms.
double planned_dice(const CorpusPlan& plan, const std::string& a, const std::string& b);

/// Plan where associated (category, attribute) pairs share `joint_documents`
/// documents and every term also appears alone in `solo_documents` documents.
CorpusPlan corpus_plan_from_associations(const AssociationMatrix& assoc, std::size_t joint_documents,
                                         std::size_t solo_documents, std::uint64_t seed);

}  // namespace semtransfer
