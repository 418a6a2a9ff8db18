#include "eggs/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <stdexcept>

namespace eggs::text {
namespace {

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

icu::UnicodeString to_nfc_lower(std::string_view utf8) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  icu::UnicodeString out = nfc->normalize(src, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
  out.toLower(icu::Locale::getRoot());
  // Lowercasing can denormalize a handful of sequences.
  out = nfc->normalize(out, status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU normalization failed");
  return out;
}

std::string to_utf8(const icu::UnicodeString& s) {
  std::string out;
  s.toUTF8String(out);
  return out;
}

}  // namespace

std::string normalize(std::string_view utf8) {
  const icu::UnicodeString lowered = to_nfc_lower(utf8);

  // Collapse whitespace runs into a single space.
  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < lowered.length();) {
    const UChar32 c = lowered.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && collapsed.length() > 0) collapsed.append(static_cast<UChar>(' '));
    pending_space = false;
    collapsed.append(c);
  }

  // Strip leading/trailing punctuation (and any whitespace exposed by it).
  std::vector<UChar32> cps;
  for (int32_t i = 0; i < collapsed.length();) {
    const UChar32 c = collapsed.char32At(i);
    cps.push_back(c);
    i += U16_LENGTH(c);
  }
  auto strippable = [](UChar32 c) { return u_ispunct(c) || u_isUWhiteSpace(c); };
  std::size_t b = 0, e = cps.size();
  while (b < e && strippable(cps[b])) ++b;
  while (e > b && strippable(cps[e - 1])) --e;

  icu::UnicodeString out;
  for (std::size_t i = b; i < e; ++i) out.append(cps[i]);
  return to_utf8(out);
}

std::string normalize_link(std::string_view url) {
  std::string out(url);
  std::size_t host_begin = 0;
  const auto scheme_end = out.find("://");
  if (scheme_end != std::string::npos) {
    for (std::size_t i = 0; i < scheme_end; ++i)
      out[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[i])));
    host_begin = scheme_end + 3;
  }
  std::size_t host_end = out.find_first_of("/?#", host_begin);
  if (host_end == std::string::npos) host_end = out.size();
  for (std::size_t i = host_begin; i < host_end; ++i)
    out[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[i])));
  return out;
}

std::string normalize_tag(std::string_view tag) {
  while (!tag.empty() && (tag.front() == '#' || tag.front() == '@')) tag.remove_prefix(1);
  return to_utf8(to_nfc_lower(tag));
}

std::size_t count_scalars(std::string_view utf8) {
  std::size_t n = 0;
  int32_t i = 0;
  const auto len = static_cast<int32_t>(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  while (i < len) {
    UChar32 c;
    U8_NEXT(s, i, len, c);
    ++n;
  }
  return n;
}

std::vector<std::string> split_scalars(std::string_view utf8) {
  std::vector<std::string> out;
  int32_t i = 0;
  const auto len = static_cast<int32_t>(utf8.size());
  const auto* s = reinterpret_cast<const uint8_t*>(utf8.data());
  while (i < len) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, len, c);
    out.emplace_back(utf8.substr(static_cast<std::size_t>(start),
                                 static_cast<std::size_t>(i - start)));
  }
  return out;
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
  };
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    const std::size_t start = i;
    while (i < s.size() && !is_space(s[i])) ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

bool is_link_token(std::string_view token) {
  return starts_with_ci(token, "http://") || starts_with_ci(token, "https://") ||
         starts_with_ci(token, "www.");
}

bool is_hashtag_token(std::string_view token) { return token.size() > 1 && token[0] == '#'; }

bool is_mention_token(std::string_view token) { return token.size() > 1 && token[0] == '@'; }

std::vector<std::string> words(std::string_view utf8) {
  const icu::UnicodeString lowered = to_nfc_lower(utf8);
  std::vector<std::string> out;
  icu::UnicodeString cur;
  auto flush = [&] {
    if (cur.length() > 0) {
      out.push_back(to_utf8(cur));
      cur.remove();
    }
  };
  for (int32_t i = 0; i < lowered.length();) {
    const UChar32 c = lowered.char32At(i);
    i += U16_LENGTH(c);
    if (u_isalnum(c) || c == '\'') {
      cur.append(c);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace eggs::text
