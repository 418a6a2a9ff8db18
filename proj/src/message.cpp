#include "eggs/message.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <json.hpp>

#include "eggs/error.hpp"
#include "eggs/text.hpp"

namespace eggs {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<std::string> ValidationReport::errors() const {
  std::vector<std::string> out;
  for (const auto& id : duplicate_ids) out.push_back("duplicate id: " + id);
  for (const auto& id : bad_timestamp_ids) out.push_back("unparseable timestamp: " + id);
  return out;
}

ValidationReport validate_dataset(std::span<const Message> messages) {
  ValidationReport report;
  report.n_messages = messages.size();
  std::unordered_set<std::string> seen;
  std::unordered_set<std::string> reported;
  for (const auto& m : messages) {
    if (!seen.insert(m.id).second && reported.insert(m.id).second)
      report.duplicate_ids.push_back(m.id);
    if (m.timestamp < 0) report.bad_timestamp_ids.push_back(m.id);
    if (m.label) ++report.n_labeled;
  }
  return report;
}

void annotate_from_text(Message& m) {
  const bool want_links = m.links.empty();
  const bool want_tags = m.hashtags.empty();
  const bool want_mentions = m.mentions.empty();
  for (auto tok : text::split_whitespace(m.text)) {
    if (want_links && text::is_link_token(tok)) {
      m.links.emplace_back(tok);
    } else if (want_tags && text::is_hashtag_token(tok)) {
      m.hashtags.emplace_back(tok.substr(1));
    } else if (want_mentions && text::is_mention_token(tok)) {
      m.mentions.emplace_back(tok.substr(1));
    }
  }
}

bool chronological_less(const Message& a, const Message& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.id < b.id;
}

bool is_chronological(std::span<const Message> messages) {
  for (std::size_t i = 1; i < messages.size(); ++i)
    if (chronological_less(messages[i], messages[i - 1])) return false;
  return true;
}

void sort_chronologically(std::vector<Message>& messages) {
  std::stable_sort(messages.begin(), messages.end(), chronological_less);
}

namespace {

std::vector<std::string> string_list(const json& j, const char* key) {
  std::vector<std::string> out;
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return out;
  if (!it->is_array()) throw DataError(std::string("field '") + key + "' must be a list");
  for (const auto& v : *it) out.push_back(v.get<std::string>());
  return out;
}

Message parse_record(const json& j, std::size_t line_index) {
  if (!j.is_object()) throw DataError("record on line " + std::to_string(line_index + 1) +
                                      " is not an object");
  Message m;
  auto str_field = [&](const char* key) -> std::string {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return {};
    if (it->is_string()) return it->get<std::string>();
    return it->dump();
  };
  m.id = str_field("id");
  if (m.id.empty())
    throw DataError("record on line " + std::to_string(line_index + 1) + " has no id");
  m.user_id = str_field("user_id");
  m.text = str_field("text");

  auto ts = j.find("timestamp");
  if (ts == j.end() || ts->is_null()) {
    m.timestamp = static_cast<std::int64_t>(line_index);
  } else if (ts->is_number_integer()) {
    m.timestamp = ts->get<std::int64_t>();
  } else if (ts->is_number_unsigned()) {
    m.timestamp = static_cast<std::int64_t>(ts->get<std::uint64_t>());
  } else {
    m.timestamp = -1;  // flagged by validate_dataset
  }

  if (auto t = j.find("target_id"); t != j.end() && !t->is_null())
    m.target_id = t->is_string() ? t->get<std::string>() : t->dump();

  const bool has_links = j.contains("links");
  const bool has_tags = j.contains("hashtags");
  const bool has_mentions = j.contains("mentions");
  m.links = string_list(j, "links");
  m.hashtags = string_list(j, "hashtags");
  m.mentions = string_list(j, "mentions");
  if (!has_links || !has_tags || !has_mentions) {
    Message scratch;
    scratch.text = m.text;
    annotate_from_text(scratch);
    if (!has_links) m.links = std::move(scratch.links);
    if (!has_tags) m.hashtags = std::move(scratch.hashtags);
    if (!has_mentions) m.mentions = std::move(scratch.mentions);
  }

  if (auto r = j.find("is_retweet"); r != j.end() && !r->is_null())
    m.is_retweet = r->is_boolean() ? r->get<bool>() : (r->get<int>() != 0);

  if (auto l = j.find("label"); l != j.end() && !l->is_null()) {
    const int v = l->get<int>();
    if (v != 0 && v != 1)
      throw DataError("label for '" + m.id + "' must be 0 or 1");
    m.label = v == 1 ? Label::kSpam : Label::kHam;
  }
  return m;
}

}  // namespace

std::vector<Message> read_messages(std::istream& in) {
  std::vector<Message> out;
  std::string line;
  std::size_t index = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("malformed record on line " + std::to_string(index + 1) + ": " + e.what());
    }
    out.push_back(parse_record(j, index));
    ++index;
  }
  return out;
}

std::vector<Message> read_messages_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open messages file: " + path);
  return read_messages(in);
}

void write_messages(std::ostream& out, std::span<const Message> messages) {
  for (const auto& m : messages) {
    ordered_json j;
    j["id"] = m.id;
    j["user_id"] = m.user_id;
    j["text"] = m.text;
    j["timestamp"] = m.timestamp;
    if (m.target_id) j["target_id"] = *m.target_id;
    j["links"] = m.links;
    j["hashtags"] = m.hashtags;
    j["mentions"] = m.mentions;
    j["is_retweet"] = m.is_retweet;
    if (m.label) j["label"] = static_cast<int>(*m.label);
    out << j.dump() << '\n';
  }
}

void write_messages_file(const std::string& path, std::span<const Message> messages) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write messages file: " + path);
  write_messages(out, messages);
}

std::unordered_map<std::string, std::size_t> index_by_id(std::span<const Message> messages) {
  std::unordered_map<std::string, std::size_t> out;
  out.reserve(messages.size());
  for (std::size_t i = 0; i < messages.size(); ++i) out.emplace(messages[i].id, i);
  return out;
}

}  // namespace eggs
