#include "semtransfer/split.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "semtransfer/error.hpp"

namespace semtransfer {

using nlohmann::json;

std::vector<Violation> validate_split(const DatasetSplit& split, const AssociationMatrix& assoc) {
  std::vector<Violation> out;
  const std::set<std::string> known(split.known_categories.begin(), split.known_categories.end());
  const std::set<std::string> novel(split.novel_categories.begin(), split.novel_categories.end());

  for (const auto& c : split.known_categories) {
    if (novel.contains(c)) out.push_back({"known_novel_overlap", c, "category '" + c + "' is both known and novel"});
  }
  for (const auto& [inst, cat] : split.train) {
    if (!known.contains(cat)) {
      out.push_back({"train_label_not_known", inst, "train instance '" + inst + "' labeled with non-known category '" + cat + "'"});
    }
  }
  for (const auto& [inst, cat] : split.fewshot) {
    if (!novel.contains(cat)) {
      out.push_back({"fewshot_label_not_novel", inst, "few-shot instance '" + inst + "' labeled with non-novel category '" + cat + "'"});
    }
    if (split.test.contains(inst)) {
      out.push_back({"fewshot_in_test", inst, "few-shot instance '" + inst + "' also in test set"});
    }
  }
  std::set<std::string> seen;
  for (const auto* group : {&split.known_categories, &split.novel_categories}) {
    for (const auto& c : *group) {
      if (!seen.insert(c).second) continue;
      if (!assoc.categories().contains(c)) {
        out.push_back({"category_missing_from_associations", c, "category '" + c + "' has no association row"});
      }
    }
  }
  return out;
}

namespace {

LabelMap label_map(const json& j, const char* key) {
  LabelMap m;
  if (!j.contains(key)) return m;
  for (const auto& [inst, cat] : j.at(key).items()) m.emplace(trim(inst), trim(cat.get<std::string>()));
  return m;
}

std::vector<std::string> id_list(const json& j, const char* key) {
  std::vector<std::string> v;
  for (const auto& x : j.at(key)) v.push_back(trim(x.get<std::string>()));
  return v;
}

}  // namespace

DatasetSplit parse_split(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    for (const auto& [key, _] : j.items()) {
      if (key != "known" && key != "novel" && key != "train" && key != "test" && key != "fewshot") {
        throw ParseError("split: unknown key '" + key + "'");
      }
    }
    DatasetSplit s;
    s.known_categories = id_list(j, "known");
    s.novel_categories = id_list(j, "novel");
    s.train = label_map(j, "train");
    s.test = label_map(j, "test");
    s.fewshot = label_map(j, "fewshot");
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("split: ") + e.what());
  }
}

DatasetSplit read_split(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open split file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_split(ss.str());
}

std::string split_to_json(const DatasetSplit& split) {
  json j;
  j["known"] = split.known_categories;
  j["novel"] = split.novel_categories;
  j["train"] = split.train;
  j["test"] = split.test;
  j["fewshot"] = split.fewshot;
  return j.dump(2) + "\n";
}

void write_split(const std::filesystem::path& path, const DatasetSplit& split) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write split file " + path.string());
  out << split_to_json(split);
}

}  // namespace semtransfer
