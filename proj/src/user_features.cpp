#include <algorithm>
#include <unordered_map>

#include "eggs/error.hpp"
#include "eggs/features.hpp"
#include "eggs/text.hpp"

namespace eggs {

std::vector<std::pair<std::string, double>> UserFeatures::named() const {
  return {{"UMsgs", msgs},         {"UHRatio", hashtag_ratio}, {"UMRatio", mention_ratio},
          {"ULRatio", link_ratio}, {"UBlacklist", blacklist},  {"UWhitelist", whitelist},
          {"UMsgMax", len_max},    {"UMsgMin", len_min},       {"UMsgMean", len_mean},
          {"TMsgs", track_msgs}};
}

namespace {

struct UserHistory {
  std::size_t msgs = 0;
  std::size_t with_hashtag = 0;
  std::size_t with_mention = 0;
  std::size_t with_link = 0;
  std::size_t known_spam = 0;
  std::size_t known_ham = 0;
  double len_max = 0;
  double len_min = 0;
  double len_sum = 0;
};

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::vector<UserFeatures> extract_user_features_sequential(std::span<const Message> messages,
                                                           const std::vector<bool>& label_visible) {
  if (!is_chronological(messages))
    throw DataError("user features require messages sorted by (timestamp, id)");
  std::unordered_map<std::string, UserHistory> users;
  std::unordered_map<std::string, std::size_t> tracks;
  std::vector<UserFeatures> out(messages.size());

  for (std::size_t i = 0; i < messages.size(); ++i) {
    const Message& m = messages[i];
    UserHistory& h = users[m.user_id];
    UserFeatures& f = out[i];
    f.msgs = static_cast<double>(h.msgs);
    f.hashtag_ratio = ratio(h.with_hashtag, h.msgs);
    f.mention_ratio = ratio(h.with_mention, h.msgs);
    f.link_ratio = ratio(h.with_link, h.msgs);
    f.blacklist = h.known_spam >= kBlacklistSpamCount ? 1.0 : 0.0;
    f.whitelist = h.known_ham >= kWhitelistHamCount ? 1.0 : 0.0;
    f.len_max = h.len_max;
    f.len_min = h.len_min;
    f.len_mean = h.msgs == 0 ? 0.0 : h.len_sum / static_cast<double>(h.msgs);
    if (m.target_id) f.track_msgs = static_cast<double>(tracks[*m.target_id]);

    // Fold this message into the history seen by later ones.
    const double len = static_cast<double>(text::count_scalars(m.text));
    h.len_max = h.msgs == 0 ? len : std::max(h.len_max, len);
    h.len_min = h.msgs == 0 ? len : std::min(h.len_min, len);
    h.len_sum += len;
    ++h.msgs;
    if (!m.hashtags.empty()) ++h.with_hashtag;
    if (!m.mentions.empty()) ++h.with_mention;
    if (!m.links.empty()) ++h.with_link;
    if (i < label_visible.size() && label_visible[i] && m.label) {
      if (*m.label == Label::kSpam) {
        ++h.known_spam;
      } else {
        ++h.known_ham;
      }
    }
    if (m.target_id) ++tracks[*m.target_id];
  }
  return out;
}

}  // namespace eggs
