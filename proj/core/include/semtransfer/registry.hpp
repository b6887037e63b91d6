#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semtransfer {

/// Ordered set of symbolic identifiers with dense indices.
///
/// Indices follow insertion order, so two registries built from the same
/// sequence of names are identical. Names are whitespace-trimmed on insert
/// and compared case-sensitively.
class Registry {
 public:
  Registry() = default;
  explicit Registry(std::span<const std::string> names);
  Registry(std::initializer_list<std::string> names);

  /// Throws ValidationError on empty or duplicate names.
  std::size_t add(std::string_view name);

  std::size_t size() const noexcept { return names_.size(); }
  bool empty() const noexcept { return names_.empty(); }
  bool contains(std::string_view name) const;

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws ValidationError if absent.
  std::size_t index(std::string_view name) const;
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }

  bool operator==(const Registry& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
};

std::string trim(std::string_view s);

}  // namespace semtransfer
