#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace eggs::text {

/// NFC, lowercase, whitespace runs collapsed to one space, leading/trailing
/// punctuation and whitespace stripped. Defines the text-relation key.
std::string normalize(std::string_view utf8);

/// Lowercases the scheme and host of a URL; path and query are kept verbatim.
std::string normalize_link(std::string_view url);

/// Lowercased tag with any leading '#' or '@' removed.
std::string normalize_tag(std::string_view tag);

/// Number of Unicode scalar values. Invalid bytes count as one each.
std::size_t count_scalars(std::string_view utf8);

/// Splits into Unicode scalar values, each re-encoded as its own UTF-8 string.
std::vector<std::string> split_scalars(std::string_view utf8);

/// Whitespace-delimited tokens.
std::vector<std::string_view> split_whitespace(std::string_view s);

bool is_link_token(std::string_view token);
bool is_hashtag_token(std::string_view token);
bool is_mention_token(std::string_view token);

/// Lowercase alphanumeric word runs, used by the sentiment lexicon.
std::vector<std::string> words(std::string_view utf8);

}  // namespace eggs::text
