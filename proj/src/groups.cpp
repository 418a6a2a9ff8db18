#include "eggs/groups.hpp"

#include <algorithm>
#include <map>

#include "eggs/error.hpp"
#include "eggs/text.hpp"

namespace eggs {

namespace {

struct RelationInfo {
  Relation relation;
  std::string_view name;
  std::string_view pseudo;
};

constexpr RelationInfo kRelations[] = {
    {Relation::kUser, "user", "USRatio"},
    {Relation::kText, "text", "MMSRatio"},
    {Relation::kLink, "link", "LSRatio"},
    {Relation::kHashtag, "hashtag", "HSRatio"},
    {Relation::kMention, "mention", "MSRatio"},
    {Relation::kTrack, "track", "TSRatio"},
    {Relation::kUserHashtag, "user_hashtag", "UHSRatio"},
};

const RelationInfo& info(Relation r) {
  for (const auto& i : kRelations)
    if (i.relation == r) return i;
  throw ConfigError("unknown relation value");
}

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

std::string_view relation_name(Relation r) { return info(r).name; }
std::string_view pseudo_feature_name(Relation r) { return info(r).pseudo; }

Relation parse_relation(std::string_view name) {
  for (const auto& i : kRelations)
    if (i.name == name) return i.relation;
  throw ConfigError("unknown relation tag: '" + std::string(name) + "'");
}

std::vector<Relation> parse_relations(const std::vector<std::string>& names) {
  std::vector<Relation> out;
  for (const auto& n : names) {
    const Relation r = parse_relation(n);
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  return out;
}

std::vector<std::string> relation_keys(const Message& m, Relation r) {
  std::vector<std::string> keys;
  switch (r) {
    case Relation::kUser:
      if (!m.user_id.empty()) keys.push_back(m.user_id);
      break;
    case Relation::kText: {
      auto k = text::normalize(m.text);
      if (!k.empty()) keys.push_back(std::move(k));
      break;
    }
    case Relation::kLink:
      for (const auto& l : m.links) keys.push_back(text::normalize_link(l));
      break;
    case Relation::kHashtag:
      for (const auto& h : m.hashtags) {
        auto k = text::normalize_tag(h);
        if (!k.empty()) keys.push_back(std::move(k));
      }
      break;
    case Relation::kMention:
      for (const auto& h : m.mentions) {
        auto k = text::normalize_tag(h);
        if (!k.empty()) keys.push_back(std::move(k));
      }
      break;
    case Relation::kTrack:
      if (m.target_id && !m.target_id->empty()) keys.push_back(*m.target_id);
      break;
    case Relation::kUserHashtag:
      if (m.user_id.empty()) break;
      for (const auto& h : m.hashtags) {
        auto k = text::normalize_tag(h);
        if (!k.empty()) keys.push_back(m.user_id + '\x1f' + k);
      }
      break;
  }
  sort_unique(keys);
  return keys;
}

bool GroupSet::has_relation(Relation r) const {
  return std::find(relations.begin(), relations.end(), r) != relations.end();
}

GroupSet build_groups(std::span<const Message> messages, const std::vector<Relation>& relations) {
  GroupSet out;
  for (Relation r : relations) {
    if (out.has_relation(r)) continue;
    out.relations.push_back(r);
    std::map<std::string, std::vector<std::string>> buckets;
    for (const auto& m : messages)
      for (auto& k : relation_keys(m, r)) buckets[std::move(k)].push_back(m.id);
    for (auto& [key, ids] : buckets) {
      sort_unique(ids);
      if (ids.size() < 2) continue;
      out.groups.push_back(Group{r, key, std::move(ids)});
    }
  }
  return out;
}

GroupIndex index_groups(const GroupSet& groups, std::span<const Message> messages) {
  const auto by_id = index_by_id(messages);
  GroupIndex idx;
  idx.members.resize(groups.groups.size());
  idx.groups_of_message.resize(messages.size());
  for (std::size_t g = 0; g < groups.groups.size(); ++g) {
    for (const auto& id : groups.groups[g].member_ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) continue;
      idx.members[g].push_back(it->second);
      idx.groups_of_message[it->second].push_back(g);
    }
  }
  return idx;
}

}  // namespace eggs
