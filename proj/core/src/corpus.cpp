#include "semtransfer/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <unordered_set>

#include "semtransfer/error.hpp"
#include "semtransfer/registry.hpp"
#include "semtransfer/text.hpp"

namespace semtransfer {

CorpusIndex CorpusIndex::build(std::span<const Document> documents) {
  if (documents.empty()) throw ValidationError("empty corpus");
  CorpusIndex idx;
  std::unordered_set<std::string> seen;
  for (const auto& doc : documents) {
    if (!seen.insert(doc.id).second) throw ValidationError("duplicate document id '" + doc.id + "'");
    const auto d = static_cast<std::uint32_t>(idx.doc_ids_.size());
    idx.doc_ids_.push_back(doc.id);
    std::vector<TermId> ids;
    for (auto& tok : tokenize(doc.text)) {
      auto [it, inserted] = idx.term_index_.try_emplace(tok, static_cast<TermId>(idx.terms_.size()));
      if (inserted) {
        idx.terms_.push_back(tok);
        idx.postings_.emplace_back();
      }
      const TermId t = it->second;
      ids.push_back(t);
      auto& plist = idx.postings_[t];
      if (plist.empty() || plist.back().doc != d) {
        plist.push_back({d, 1});
      } else {
        ++plist.back().count;
      }
    }
    idx.doc_tokens_.push_back(std::move(ids));
  }
  return idx;
}

std::optional<CorpusIndex::TermId> CorpusIndex::term(std::string_view token) const {
  auto it = term_index_.find(std::string(token));
  if (it == term_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::vector<CorpusIndex::TermId>> CorpusIndex::resolve(std::string_view query) const {
  std::vector<TermId> ids;
  for (const auto& tok : tokenize(query)) {
    auto t = term(tok);
    if (!t) return std::nullopt;
    ids.push_back(*t);
  }
  if (ids.empty()) return std::nullopt;
  return ids;
}

std::vector<std::uint32_t> CorpusIndex::documents_containing(std::string_view query) const {
  auto ids = resolve(query);
  if (!ids) return {};
  std::vector<std::uint32_t> docs;
  for (const auto& p : postings_[ids->front()]) docs.push_back(p.doc);
  for (std::size_t k = 1; k < ids->size(); ++k) {
    std::vector<std::uint32_t> other;
    for (const auto& p : postings_[(*ids)[k]]) other.push_back(p.doc);
    std::vector<std::uint32_t> both;
    std::set_intersection(docs.begin(), docs.end(), other.begin(), other.end(), std::back_inserter(both));
    docs = std::move(both);
  }
  return docs;
}

std::size_t CorpusIndex::document_frequency(std::string_view query) const {
  return documents_containing(query).size();
}

namespace {

double dice(std::size_t joint, std::size_t na, std::size_t nb) {
  if (na == 0 || nb == 0) return 0.0;
  return 2.0 * static_cast<double>(joint) / static_cast<double>(na + nb);
}

}  // namespace

double dice_hitcount(const CorpusIndex& index, std::string_view term_a, std::string_view term_b) {
  const auto da = index.documents_containing(term_a);
  const auto db = index.documents_containing(term_b);
  std::vector<std::uint32_t> joint;
  std::set_intersection(da.begin(), da.end(), db.begin(), db.end(), std::back_inserter(joint));
  return dice(joint.size(), da.size(), db.size());
}

double dice_snippet(const CorpusIndex& index, std::size_t window, std::string_view term_a,
                    std::string_view term_b) {
  if (window == 0) throw ValidationError("snippet window must be at least 1 token");
  const auto qa = index.resolve(term_a);
  const auto qb = index.resolve(term_b);
  if (!qa || !qb) return 0.0;

  // Relevant terms get a slot; each query becomes a list of slots.
  std::vector<CorpusIndex::TermId> slots;
  auto slot_of = [&](CorpusIndex::TermId t) {
    auto it = std::find(slots.begin(), slots.end(), t);
    if (it != slots.end()) return static_cast<std::size_t>(it - slots.begin());
    slots.push_back(t);
    return slots.size() - 1;
  };
  std::vector<std::size_t> sa, sb;
  for (auto t : *qa) sa.push_back(slot_of(t));
  for (auto t : *qb) sb.push_back(slot_of(t));

  std::vector<std::uint32_t> docs = index.documents_containing(term_a);
  {
    const auto db = index.documents_containing(term_b);
    std::vector<std::uint32_t> u;
    std::set_union(docs.begin(), docs.end(), db.begin(), db.end(), std::back_inserter(u));
    docs = std::move(u);
  }

  std::size_t na = 0, nb = 0, joint = 0;
  std::vector<std::size_t> counts(slots.size());
  auto present = [&](const std::vector<std::size_t>& q) {
    return std::all_of(q.begin(), q.end(), [&](std::size_t s) { return counts[s] > 0; });
  };
  auto tally = [&] {
    const bool a = present(sa), b = present(sb);
    na += a;
    nb += b;
    joint += a && b;
  };
  for (auto d : docs) {
    const auto toks = index.tokens(d);
    const std::size_t len = toks.size();
    const std::size_t w = std::min(window, len);
    std::fill(counts.begin(), counts.end(), 0);
    auto bump = [&](CorpusIndex::TermId t, int delta) {
      for (std::size_t s = 0; s < slots.size(); ++s) {
        if (slots[s] == t) counts[s] += delta;
      }
    };
    for (std::size_t i = 0; i < w; ++i) bump(toks[i], +1);
    tally();
    for (std::size_t start = 1; start + w <= len; ++start) {
      bump(toks[start - 1], -1);
      bump(toks[start + w - 1], +1);
      tally();
    }
  }
  return dice(joint, na, nb);
}

namespace {

using SparseVec = std::vector<std::pair<std::uint32_t, double>>;

SparseVec concept_vector(const CorpusIndex& index, std::string_view query) {
  std::vector<double> dense;
  std::vector<std::uint32_t> touched;
  const double n = static_cast<double>(index.doc_count());
  for (const auto& tok : tokenize(query)) {
    auto t = index.term(tok);
    if (!t) continue;
    const double idf = std::log(n / static_cast<double>(index.document_frequency(*t)));
    if (idf == 0.0) continue;
    if (dense.empty()) dense.assign(index.doc_count(), 0.0);
    for (const auto& p : index.postings(*t)) {
      if (dense[p.doc] == 0.0) touched.push_back(p.doc);
      dense[p.doc] += static_cast<double>(p.count) * idf;
    }
  }
  std::sort(touched.begin(), touched.end());
  SparseVec v;
  for (auto d : touched) v.emplace_back(d, dense[d]);
  return v;
}

}  // namespace

double esa_relatedness(const CorpusIndex& index, std::string_view term_a, std::string_view term_b) {
  const auto va = concept_vector(index, term_a);
  const auto vb = concept_vector(index, term_b);
  if (va.empty() || vb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [_, w] : va) na += w * w;
  for (const auto& [_, w] : vb) nb += w * w;
  std::size_t i = 0, j = 0;
  while (i < va.size() && j < vb.size()) {
    if (va[i].first == vb[j].first) {
      dot += va[i].second * vb[j].second;
      ++i;
      ++j;
    } else if (va[i].first < vb[j].first) {
      ++i;
    } else {
      ++j;
    }
  }
  return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
}

std::vector<Document> read_corpus_jsonl(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      Document d;
      d.id = trim(j.at("id").get<std::string>());
      d.text = j.at("text").get<std::string>();
      if (j.contains("category")) d.group = j.at("category").get<std::string>();
      docs.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("corpus line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<Document> read_corpus_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open corpus " + path.string());
  return read_corpus_jsonl(in);
}

void write_corpus_jsonl(std::ostream& out, std::span<const Document> docs) {
  for (const auto& d : docs) {
    nlohmann::ordered_json j;
    j["id"] = d.id;
    j["text"] = d.text;
    if (!d.group.empty()) j["category"] = d.group;
    out << j.dump() << '\n';
  }
}

}  // namespace semtransfer
