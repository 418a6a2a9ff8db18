#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace eggs {

enum class Label : std::uint8_t { kHam = 0, kSpam = 1 };

/// One social-network post. `timestamp` is epoch seconds, or the insertion
/// index when the source record had none. Negative means unparseable.
struct Message {
  std::string id;
  std::string user_id;
  std::string text;
  std::int64_t timestamp = 0;
  std::optional<std::string> target_id;
  std::vector<std::string> links;
  std::vector<std::string> hashtags;
  std::vector<std::string> mentions;
  bool is_retweet = false;
  std::optional<Label> label;

  bool is_spam() const { return label == Label::kSpam; }
};

/// Message id -> spam probability (or gold label encoded as 0/1).
using Predictions = std::unordered_map<std::string, double>;

struct ValidationReport {
  std::vector<std::string> duplicate_ids;
  std::vector<std::string> bad_timestamp_ids;
  std::size_t n_messages = 0;
  std::size_t n_labeled = 0;

  double label_coverage() const {
    return n_messages == 0 ? 0.0
                           : static_cast<double>(n_labeled) / static_cast<double>(n_messages);
  }
  bool valid() const { return duplicate_ids.empty() && bad_timestamp_ids.empty(); }
  std::vector<std::string> errors() const;
};

ValidationReport validate_dataset(std::span<const Message> messages);

/// Fills empty links/hashtags/mentions from `#tag`, `@user` and URL tokens in the text.
void annotate_from_text(Message& m);

/// Ordering used everywhere for "chronological": (timestamp, id).
bool chronological_less(const Message& a, const Message& b);
bool is_chronological(std::span<const Message> messages);
void sort_chronologically(std::vector<Message>& messages);

// ---- line-delimited records ------------------------------------------------
//
// One JSON object per line. Recognised fields: id, user_id, text, timestamp,
// target_id, links, hashtags, mentions, is_retweet, label (0 ham / 1 spam).
// Unknown fields are ignored. A missing timestamp becomes the line index.

std::vector<Message> read_messages(std::istream& in);
std::vector<Message> read_messages_file(const std::string& path);
void write_messages(std::ostream& out, std::span<const Message> messages);
void write_messages_file(const std::string& path, std::span<const Message> messages);

std::unordered_map<std::string, std::size_t> index_by_id(std::span<const Message> messages);

}  // namespace eggs
