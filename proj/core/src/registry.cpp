#include "semtransfer/registry.hpp"

#include "semtransfer/error.hpp"

namespace semtransfer {

std::string trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

Registry::Registry(std::span<const std::string> names) {
  for (const auto& n : names) add(n);
}

Registry::Registry(std::initializer_list<std::string> names) {
  for (const auto& n : names) add(n);
}

std::size_t Registry::add(std::string_view name) {
  std::string key = trim(name);
  if (key.empty()) throw ValidationError("empty identifier");
  if (index_.contains(key)) throw ValidationError("duplicate identifier '" + key + "'");
  const std::size_t i = names_.size();
  index_.emplace(key, i);
  names_.push_back(std::move(key));
  return i;
}

bool Registry::contains(std::string_view name) const { return find(name).has_value(); }

std::optional<std::size_t> Registry::find(std::string_view name) const {
  auto it = index_.find(trim(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t Registry::index(std::string_view name) const {
  auto i = find(name);
  if (!i) throw ValidationError("unknown identifier '" + std::string(name) + "'");
  return *i;
}

}  // namespace semtransfer
