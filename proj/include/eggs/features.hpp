#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "eggs/feature_matrix.hpp"
#include "eggs/follower_graph.hpp"
#include "eggs/message.hpp"

namespace eggs {

// ---- content -----------------------------------------------------------------

struct ContentFeatures {
  double num_chars = 0;
  double num_hashtags = 0;
  double num_links = 0;
  double num_mentions = 0;
  double is_retweet = 0;
  double polarity = 0;      // [-1, 1]
  double subjectivity = 0;  // [0, 1]

  std::vector<std::pair<std::string, double>> named() const;
};

ContentFeatures extract_content_features(const Message& m);

struct Sentiment {
  double polarity = 0;
  double subjectivity = 0;
};

/// Mean lexicon weight over matched words; zero when nothing matches.
Sentiment lexicon_sentiment(std::string_view text);

// ---- per-user history ----------------------------------------------------------

struct UserFeatures {
  double msgs = 0;          // UMsgs
  double hashtag_ratio = 0; // UHRatio
  double mention_ratio = 0; // UMRatio
  double link_ratio = 0;    // ULRatio
  double blacklist = 0;     // >= 3 known spam before this message
  double whitelist = 0;     // >= 10 known ham before this message
  double len_max = 0;
  double len_min = 0;
  double len_mean = 0;
  double track_msgs = 0;    // TMsgs

  std::vector<std::pair<std::string, double>> named() const;
  bool operator==(const UserFeatures&) const = default;
};

inline constexpr int kBlacklistSpamCount = 3;
inline constexpr int kWhitelistHamCount = 10;

/// Features for position i depend only on positions < i. Labels are read only
/// where `label_visible[i]` is true (an empty mask hides every label).
/// Throws DataError if `messages` is not in (timestamp, id) order.
std::vector<UserFeatures> extract_user_features_sequential(std::span<const Message> messages,
                                                           const std::vector<bool>& label_visible);

// ---- character n-grams -----------------------------------------------------------

struct NgramVocabulary {
  int n = 3;
  std::vector<std::string> grams;  // rank order
  std::unordered_map<std::string, std::size_t> index;

  bool empty() const { return grams.empty(); }
};

/// Character n-grams of the normalized text, in order of occurrence.
std::vector<std::string> char_ngrams(std::string_view text, int n);

/// Ranked by raw frequency over all training texts, ties lexicographic.
NgramVocabulary fit_ngram_vocabulary(std::span<const std::string> train_texts, int n = 3,
                                     std::size_t top_k = 10000);

/// Vocabulary indices present in `text`, sorted, deduplicated. OOV grams are ignored.
std::vector<std::size_t> ngram_features(std::string_view text, const NgramVocabulary& vocab);

void write_vocabulary(std::ostream& out, const NgramVocabulary& vocab);
NgramVocabulary read_vocabulary(std::istream& in);

// ---- assembly ------------------------------------------------------------------------

struct FeatureConfig {
  bool use_ngrams = true;
  int ngram_n = 3;
  std::size_t ngram_top_k = 10000;
  /// Families removed in limited mode ("ngram" and/or "graph").
  std::vector<std::string> drop_families;
};

/// Builds X_g for `messages` (chronologically sorted). `label_visible` marks
/// messages whose gold label may feed the blacklist/whitelist features.
FeatureMatrix assemble_features(std::span<const Message> messages,
                                const std::vector<bool>& label_visible,
                                const GraphFeatureTable& graph, const NgramVocabulary* vocab,
                                const FeatureConfig& config);

}  // namespace eggs
