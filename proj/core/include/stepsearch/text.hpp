#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace stepsearch {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Escapes '&', '<', '>' so arbitrary text can be embedded as element content.
std::string escape_content(std::string_view raw);
/// Inverse of escape_content; unknown entities and bare '&' pass through.
std::string unescape_content(std::string_view escaped);

/// Splits text into BLEU/word tokens: ASCII alphanumeric runs form one token,
/// CJK codepoints are one token each, everything else separates.
std::vector<std::string> word_tokens(std::string_view text);

std::vector<std::string> split_lines(std::string_view text);

}  // namespace stepsearch
