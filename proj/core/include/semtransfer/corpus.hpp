#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semtransfer {

struct Document {
  std::string id;
  std::string text;
  std::string group;  // optional "category" field, used to group script documents
};

/// Inverted index over a tokenized document collection.
///
/// Queries are tokenized the same way as documents; a multi-word query
/// matches a document (or window) only when every one of its tokens occurs
/// there.
class CorpusIndex {
 public:
  using TermId = std::uint32_t;
  struct Posting {
    std::uint32_t doc;
    std::uint32_t count;
  };

  /// Throws ValidationError on an empty corpus or duplicate document ids.
  static CorpusIndex build(std::span<const Document> documents);

  std::size_t doc_count() const noexcept { return doc_ids_.size(); }
  const std::string& doc_id(std::size_t doc) const { return doc_ids_.at(doc); }
  std::span<const TermId> tokens(std::size_t doc) const { return doc_tokens_.at(doc); }

  std::optional<TermId> term(std::string_view token) const;
  const std::string& term_text(TermId t) const { return terms_.at(t); }
  std::span<const Posting> postings(TermId t) const { return postings_.at(t); }
  std::size_t document_frequency(TermId t) const { return postings_.at(t).size(); }

  /// Query tokens mapped to term ids; nullopt if any token is out of vocabulary
  /// or the query has no tokens.
  std::optional<std::vector<TermId>> resolve(std::string_view query) const;
  /// Sorted indices of documents containing every query token.
  std::vector<std::uint32_t> documents_containing(std::string_view query) const;
  std::size_t document_frequency(std::string_view query) const;

 private:
  std::vector<std::string> doc_ids_;
  std::vector<std::vector<TermId>> doc_tokens_;
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> term_index_;
  std::vector<std::vector<Posting>> postings_;  // per term, sorted by doc
};

/// Window sentinel: one window per document.
inline constexpr std::size_t kUnboundedWindow = std::numeric_limits<std::size_t>::max();

/// 2|D_a ∩ D_b| / (|D_a| + |D_b|) over document sets; 0 if either set is empty.
double dice_hitcount(const CorpusIndex& index, std::string_view term_a, std::string_view term_b);

/// Dice coefficient over sliding windows of `window` consecutive tokens
/// (a shorter document forms a single window). Throws ValidationError on window 0.
double dice_snippet(const CorpusIndex& index, std::size_t window, std::string_view term_a,
                    std::string_view term_b);

/// Cosine of tf*idf concept vectors over documents (explicit semantic analysis).
/// A multi-word query sums its tokens' vectors.
double esa_relatedness(const CorpusIndex& index, std::string_view term_a, std::string_view term_b);

/// One JSON object per line with string fields "id" and "text" and an optional "category".
std::vector<Document> read_corpus_jsonl(std::istream& in);
std::vector<Document> read_corpus_jsonl(const std::filesystem::path& path);
void write_corpus_jsonl(std::ostream& out, std::span<const Document> docs);

}  // namespace semtransfer
