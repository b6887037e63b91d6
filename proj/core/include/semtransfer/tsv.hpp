#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "semtransfer/matrix.hpp"

namespace semtransfer {

// Matrix TSV layout: optional "# ..." comment lines, then a header row whose
// first cell is empty followed by column ids, then one row per identifier.
// Numbers carry 9 significant digits.

struct TsvTable {
  LabeledMatrix matrix;
  std::vector<std::string> comments;  // without the leading "# "
};

std::string format_number(double v);

void write_tsv(std::ostream& out, const LabeledMatrix& m, const std::vector<std::string>& comments = {});
void write_tsv(const std::filesystem::path& path, const LabeledMatrix& m,
               const std::vector<std::string>& comments = {});

TsvTable read_tsv(std::istream& in);
TsvTable read_tsv(const std::filesystem::path& path);

/// Value of a "key=value" comment, or empty.
std::string comment_value(const std::vector<std::string>& comments, std::string_view key);

AssociationMatrix read_association(const std::filesystem::path& path);
void write_association(const std::filesystem::path& path, const AssociationMatrix& m);

RelatednessMatrix read_relatedness(const std::filesystem::path& path);
void write_relatedness(const std::filesystem::path& path, const RelatednessMatrix& m);

AttributeScoreMatrix read_attribute_scores(const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);
CategoryScoreMatrix read_category_scores(const std::filesystem::path& path);
void write_category_scores(const std::filesystem::path& path, const CategoryScoreMatrix& m);

/// Splits on tabs; keeps empty cells.
std::vector<std::string> split_tabs(std::string_view line);

}  // namespace semtransfer
