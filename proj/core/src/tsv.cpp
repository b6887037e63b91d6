#include "semtransfer/tsv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "semtransfer/error.hpp"

namespace semtransfer {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<std::string> split_tabs(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cells;
}

void write_tsv(std::ostream& out, const LabeledMatrix& m, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (const auto& c : m.cols.names()) out << '\t' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    out << m.rows.name(i);
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) out << '\t' << format_number(m.values(i, j));
    out << '\n';
  }
}

void write_tsv(const std::filesystem::path& path, const LabeledMatrix& m,
               const std::vector<std::string>& comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path.string());
  write_tsv(out, m, comments);
}

namespace {

double parse_number(std::string_view cell, std::size_t line_no) {
  const std::string s = trim(cell);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": not a number '" + s + "'");
  }
  if (!std::isfinite(v)) throw ParseError("line " + std::to_string(line_no) + ": non-finite value");
  return v;
}

}  // namespace

TsvTable read_tsv(std::istream& in) {
  TsvTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line.empty()) continue;
      if (line.starts_with('#')) {
        t.comments.push_back(trim(line.substr(1)));
        continue;
      }
      auto cells = split_tabs(line);
      if (!trim(cells.front()).empty()) throw ParseError("TSV header must start with an empty cell");
      try {
        for (std::size_t j = 1; j < cells.size(); ++j) t.matrix.cols.add(cells[j]);
      } catch (const ValidationError& e) {
        throw ParseError(std::string("TSV header: ") + e.what());
      }
      have_header = true;
      continue;
    }
    if (trim(line).empty()) continue;
    auto cells = split_tabs(line);
    if (cells.size() != t.matrix.cols.size() + 1) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(t.matrix.cols.size() + 1) + " cells, got " + std::to_string(cells.size()));
    }
    try {
      t.matrix.rows.add(cells[0]);
    } catch (const ValidationError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    std::vector<double> r;
    r.reserve(cells.size() - 1);
    for (std::size_t j = 1; j < cells.size(); ++j) r.push_back(parse_number(cells[j], line_no));
    rows.push_back(std::move(r));
  }
  if (!have_header) throw ParseError("TSV has no header row");
  t.matrix.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.matrix.cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.matrix.values(i, j) = rows[i][j];
  }
  return t;
}

TsvTable read_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_tsv(in);
}

std::string comment_value(const std::vector<std::string>& comments, std::string_view key) {
  for (const auto& c : comments) {
    const auto eq = c.find('=');
    if (eq != std::string::npos && trim(c.substr(0, eq)) == key) return trim(c.substr(eq + 1));
  }
  return {};
}

AssociationMatrix read_association(const std::filesystem::path& path) {
  auto t = read_tsv(path);
  const auto& v = t.matrix.values;
  const bool binary = ((v.array() == 0.0) || (v.array() == 1.0)).all();
  return AssociationMatrix::create(std::move(t.matrix.rows), std::move(t.matrix.cols), v, binary);
}

void write_association(const std::filesystem::path& path, const AssociationMatrix& m) {
  write_tsv(path, m, {std::string("binary=") + (m.binary ? "true" : "false")});
}

RelatednessMatrix read_relatedness(const std::filesystem::path& path) {
  auto t = read_tsv(path);
  const std::string tag = comment_value(t.comments, "measure");
  const Measure measure = tag.empty() ? Measure::Fused : parse_measure(tag);
  return RelatednessMatrix::create(std::move(t.matrix.rows), std::move(t.matrix.cols),
                                   std::move(t.matrix.values), measure);
}

void write_relatedness(const std::filesystem::path& path, const RelatednessMatrix& m) {
  write_tsv(path, m, {"measure=" + to_string(m.measure)});
}

AttributeScoreMatrix read_attribute_scores(const std::filesystem::path& path) {
  auto t = read_tsv(path);
  return AttributeScoreMatrix::create(std::move(t.matrix.rows), std::move(t.matrix.cols),
                                      std::move(t.matrix.values));
}

FeatureMatrix read_features(const std::filesystem::path& path) {
  auto t = read_tsv(path);
  return FeatureMatrix::create(std::move(t.matrix.rows), std::move(t.matrix.cols), std::move(t.matrix.values));
}

CategoryScoreMatrix read_category_scores(const std::filesystem::path& path) {
  auto t = read_tsv(path);
  return CategoryScoreMatrix::create(std::move(t.matrix.rows), std::move(t.matrix.cols),
                                     std::move(t.matrix.values), comment_value(t.comments, "normalized") == "true");
}

void write_category_scores(const std::filesystem::path& path, const CategoryScoreMatrix& m) {
  std::vector<std::string> comments;
  if (m.normalized) comments.emplace_back("normalized=true");
  write_tsv(path, m, comments);
}

}  // namespace semtransfer
