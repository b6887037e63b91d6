#include "semtransfer/taxonomy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "semtransfer/error.hpp"
#include "semtransfer/tsv.hpp"

namespace semtransfer {

Taxonomy Taxonomy::build(const std::vector<Edge>& edges, const std::vector<Probability>& probabilities) {
  Taxonomy t;
  auto ensure = [&](const std::string& name) {
    if (auto i = t.nodes_.find(name)) return *i;
    const auto i = t.nodes_.add(name);
    t.parent_.emplace_back();
    return i;
  };
  for (const auto& [child, parent] : edges) {
    const auto c = ensure(child);
    const auto p = ensure(parent);
    if (c == p) throw ValidationError("taxonomy: self loop at '" + t.nodes_.name(c) + "'");
    if (t.parent_[c] && *t.parent_[c] != p) {
      throw ValidationError("taxonomy: node '" + t.nodes_.name(c) + "' has two parents");
    }
    t.parent_[c] = p;
  }
  for (const auto& [node, _] : probabilities) ensure(node);
  if (t.nodes_.empty()) throw ValidationError("taxonomy: no nodes");

  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!t.parent_[i]) roots.push_back(i);
  }
  if (roots.size() != 1) {
    throw ValidationError("taxonomy: expected a single root, found " + std::to_string(roots.size()));
  }
  t.root_ = roots.front();

  t.children_.assign(t.size(), {});
  t.depth_.assign(t.size(), 0);
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::size_t steps = 0;
    for (auto cur = t.parent_[i]; cur; cur = t.parent_[*cur]) {
      if (++steps > t.size()) throw ValidationError("taxonomy: cycle through '" + t.nodes_.name(i) + "'");
    }
    t.depth_[i] = steps;
    if (t.parent_[i]) t.children_[*t.parent_[i]].push_back(i);
  }

  if (!probabilities.empty()) {
    t.prob_.assign(t.size(), std::nan(""));
    for (const auto& [node, p] : probabilities) {
      if (!(p > 0.0 && p <= 1.0)) throw ValidationError("taxonomy: probability of '" + node + "' outside (0,1]");
      t.prob_[t.nodes_.index(node)] = p;
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (std::isnan(t.prob_[i])) throw ValidationError("taxonomy: no probability for '" + t.nodes_.name(i) + "'");
      if (t.parent_[i] && t.prob_[i] > t.prob_[*t.parent_[i]]) {
        throw ValidationError("taxonomy: probability of '" + t.nodes_.name(i) + "' exceeds its parent's");
      }
    }
    if (t.prob_[t.root_] != 1.0) throw ValidationError("taxonomy: root probability must be 1");
  }
  return t;
}

std::optional<std::size_t> Taxonomy::parent(std::size_t node) const { return parent_.at(node); }

std::size_t Taxonomy::lcs(std::size_t a, std::size_t b) const {
  while (depth_.at(a) > depth_.at(b)) a = *parent_[a];
  while (depth_.at(b) > depth_.at(a)) b = *parent_[b];
  while (a != b) {
    a = *parent_[a];
    b = *parent_[b];
  }
  return a;
}

std::size_t Taxonomy::distance(std::size_t a, std::size_t b) const {
  const auto l = lcs(a, b);
  return depth_[a] + depth_[b] - 2 * depth_[l];
}

std::vector<std::size_t> Taxonomy::descendants(std::size_t node, bool include_self) const {
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack(children_.at(node).begin(), children_.at(node).end());
  while (!stack.empty()) {
    const auto n = stack.back();
    stack.pop_back();
    out.push_back(n);
    stack.insert(stack.end(), children_[n].begin(), children_[n].end());
  }
  if (include_self) out.push_back(node);
  std::sort(out.begin(), out.end());
  return out;
}

double lin_relatedness(const Taxonomy& tax, std::string_view a, std::string_view b) {
  if (!tax.has_probabilities()) throw ValidationError("Lin relatedness requires node probabilities");
  const auto ia = tax.nodes().index(a);
  const auto ib = tax.nodes().index(b);
  const auto l = tax.lcs(ia, ib);
  if (l == tax.root()) return 0.0;
  auto logp = [&](std::size_t n) { return std::log(std::max(tax.probability(n), 1e-12)); };
  const double denom = logp(ia) + logp(ib);
  if (denom == 0.0) return 0.0;
  return std::clamp(2.0 * logp(l) / denom, 0.0, 1.0);
}

namespace {

std::vector<std::vector<std::string>> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty() || line.starts_with('#')) continue;
    auto cells = split_tabs(line);
    if (cells.size() != 2) throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 2 cells");
    if (trim(cells[0]).empty()) continue;  // header row
    for (auto& c : cells) c = trim(c);
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

std::vector<Taxonomy::Edge> read_taxonomy_edges(const std::filesystem::path& path) {
  std::vector<Taxonomy::Edge> edges;
  for (auto& r : read_pairs(path)) edges.emplace_back(std::move(r[0]), std::move(r[1]));
  return edges;
}

std::vector<Taxonomy::Probability> read_taxonomy_probabilities(const std::filesystem::path& path) {
  std::vector<Taxonomy::Probability> probs;
  for (auto& r : read_pairs(path)) {
    double p = 0.0;
    const auto [ptr, ec] = std::from_chars(r[1].data(), r[1].data() + r[1].size(), p);
    if (ec != std::errc() || ptr != r[1].data() + r[1].size()) {
      throw ParseError(path.string() + ": bad probability '" + r[1] + "'");
    }
    probs.emplace_back(std::move(r[0]), p);
  }
  return probs;
}

Taxonomy read_taxonomy(const std::filesystem::path& edges,
                       const std::optional<std::filesystem::path>& probabilities) {
  auto e = read_taxonomy_edges(edges);
  std::vector<Taxonomy::Probability> p;
  if (probabilities) p = read_taxonomy_probabilities(*probabilities);
  return Taxonomy::build(e, p);
}

}  // namespace semtransfer
