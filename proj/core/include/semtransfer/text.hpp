#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace semtransfer {

/// Splits on Unicode whitespace, lowercases ASCII letters and strips leading
/// and trailing ASCII punctuation. Tokens that become empty are dropped.
/// No stemming.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace semtransfer
