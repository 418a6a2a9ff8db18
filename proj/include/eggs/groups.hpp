#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eggs/message.hpp"

namespace eggs {

enum class Relation { kUser, kText, kLink, kHashtag, kMention, kTrack, kUserHashtag };

std::string_view relation_name(Relation r);
/// Throws ConfigError on an unknown tag.
Relation parse_relation(std::string_view name);
std::vector<Relation> parse_relations(const std::vector<std::string>& names);
/// Stacking column for a relation (USRatio, MMSRatio, ...).
std::string_view pseudo_feature_name(Relation r);

/// Grouping keys a message contributes under a relation, deduplicated, sorted.
std::vector<std::string> relation_keys(const Message& m, Relation r);

/// A hub: every message sharing one relation key. Members sorted by id.
struct Group {
  Relation relation;
  std::string key;
  std::vector<std::string> member_ids;

  bool operator==(const Group&) const = default;
};

/// Groups plus the relation list they were built for.
struct GroupSet {
  std::vector<Relation> relations;
  std::vector<Group> groups;

  bool has_relation(Relation r) const;
};

/// Singleton groups are dropped. Output is ordered by (position of the
/// relation in `relations`, key), so it does not depend on message order.
GroupSet build_groups(std::span<const Message> messages, const std::vector<Relation>& relations);

/// Group membership resolved to positions in a particular message list.
struct GroupIndex {
  std::vector<std::vector<std::size_t>> members;             // per group
  std::vector<std::vector<std::size_t>> groups_of_message;   // per message
};

/// Members not present in `messages` are skipped; groups left with fewer
/// than two resolvable members are kept but empty of relational effect.
GroupIndex index_groups(const GroupSet& groups, std::span<const Message> messages);

}  // namespace eggs
