#include <algorithm>
#include <string_view>

#include "eggs/features.hpp"
#include "eggs/text.hpp"

namespace eggs {
namespace {

struct LexiconEntry {
  std::string_view word;
  double polarity;
  double subjectivity;
};

// Small embedded sentiment lexicon. Weights follow the usual pattern-style
// scale: polarity in [-1, 1], subjectivity in [0, 1].
constexpr LexiconEntry kLexicon[] = {
    {"amazing", 0.6, 0.9},   {"awesome", 1.0, 1.0},    {"bad", -0.7, 0.67},
    {"beautiful", 0.85, 1.0},{"best", 1.0, 0.3},       {"better", 0.5, 0.5},
    {"boring", -1.0, 1.0},   {"cheap", 0.4, 0.7},      {"cool", 0.35, 0.65},
    {"crap", -0.8, 0.8},     {"dope", 0.5, 0.8},       {"easy", 0.43, 0.83},
    {"epic", 0.1, 0.1},      {"exclusive", 0.0, 0.5},  {"fantastic", 0.4, 0.9},
    {"fake", -0.5, 1.0},     {"free", 0.4, 0.8},       {"fun", 0.3, 0.2},
    {"good", 0.7, 0.6},      {"great", 0.8, 0.75},     {"guaranteed", 0.5, 0.6},
    {"happy", 0.8, 1.0},     {"hate", -0.8, 0.9},      {"horrible", -1.0, 1.0},
    {"incredible", 0.9, 0.9},{"instant", 0.0, 0.1},    {"lame", -0.5, 0.75},
    {"love", 0.5, 0.6},      {"lovely", 0.5, 0.75},    {"lucky", 0.33, 1.0},
    {"nice", 0.6, 1.0},      {"perfect", 1.0, 1.0},    {"poor", -0.4, 0.6},
    {"sad", -0.5, 1.0},      {"scam", -0.6, 0.8},      {"special", 0.36, 0.57},
    {"stupid", -0.8, 1.0},   {"sweet", 0.35, 0.65},    {"terrible", -1.0, 1.0},
    {"ugly", -0.7, 1.0},     {"unbelievable", 0.5, 0.8},{"urgent", 0.0, 0.3},
    {"weird", -0.5, 1.0},    {"win", 0.8, 0.4},        {"winner", 0.5, 0.5},
    {"wonderful", 1.0, 1.0}, {"worst", -1.0, 1.0},     {"wow", 0.1, 1.0},
};

const LexiconEntry* lookup(std::string_view w) {
  for (const auto& e : kLexicon)
    if (e.word == w) return &e;
  return nullptr;
}

}  // namespace

Sentiment lexicon_sentiment(std::string_view t) {
  Sentiment s;
  int hits = 0;
  for (const auto& w : text::words(t)) {
    if (const auto* e = lookup(w)) {
      s.polarity += e->polarity;
      s.subjectivity += e->subjectivity;
      ++hits;
    }
  }
  if (hits > 0) {
    s.polarity /= hits;
    s.subjectivity /= hits;
  }
  return s;
}

std::vector<std::pair<std::string, double>> ContentFeatures::named() const {
  return {{"NumChars", num_chars},     {"NumHashtags", num_hashtags},
          {"NumLinks", num_links},     {"NumMentions", num_mentions},
          {"IsRetweet", is_retweet},   {"Polarity", polarity},
          {"Subjectivity", subjectivity}};
}

ContentFeatures extract_content_features(const Message& m) {
  ContentFeatures f;
  f.num_chars = static_cast<double>(text::count_scalars(m.text));
  for (auto tok : text::split_whitespace(m.text)) {
    if (text::is_link_token(tok)) {
      f.num_links += 1;
    } else if (text::is_hashtag_token(tok)) {
      f.num_hashtags += 1;
    } else if (text::is_mention_token(tok)) {
      f.num_mentions += 1;
    }
  }
  f.is_retweet = m.is_retweet ? 1.0 : 0.0;
  const auto s = lexicon_sentiment(m.text);
  f.polarity = s.polarity;
  f.subjectivity = s.subjectivity;
  return f;
}

}  // namespace eggs
