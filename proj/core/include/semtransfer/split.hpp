#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "semtransfer/matrix.hpp"

namespace semtransfer {

/// instance id -> category id
using LabelMap = std::map<std::string, std::string>;

/// Partition of categories into known and novel, with labeled instance sets.
struct DatasetSplit {
  std::vector<std::string> known_categories;
  std::vector<std::string> novel_categories;
  LabelMap train;    // known categories only
  LabelMap test;     // may include known-category distractors
  LabelMap fewshot;  // novel categories only, disjoint from test

  Registry known_registry() const { return Registry(known_categories); }
  Registry novel_registry() const { return Registry(novel_categories); }

  bool operator==(const DatasetSplit&) const = default;
};

struct Violation {
  std::string kind;
  std::string subject;
  std::string message;
};

/// Empty iff every split invariant holds and all split categories appear in `assoc`.
std::vector<Violation> validate_split(const DatasetSplit& split, const AssociationMatrix& assoc);

/// JSON object with keys known, novel, train, test, fewshot.
DatasetSplit read_split(const std::filesystem::path& path);
DatasetSplit parse_split(const std::string& json_text);
std::string split_to_json(const DatasetSplit& split);
void write_split(const std::filesystem::path& path, const DatasetSplit& split);

}  // namespace semtransfer
