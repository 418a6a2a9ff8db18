#include "eggs/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "eggs/error.hpp"
#include "eggs/rng.hpp"
#include "eggs/text.hpp"

namespace eggs {

void GeneratorConfig::validate() const {
  auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ConfigError(std::string("generator field '") + name + "' must lie in [0, 1]");
  };
  prob(spam_prevalence, "spam_prevalence");
  prob(compromised_account_prob, "compromised_account_prob");
  prob(campaign_burst, "campaign_burst");
  prob(text_reuse_prob, "text_reuse_prob");
  prob(link_reuse_prob, "link_reuse_prob");
  prob(feature_noise, "feature_noise");
  if (n_users == 0 || n_messages == 0 || ham_vocab_size == 0 || spam_vocab_size == 0 ||
      shared_vocab_size == 0 || accounts_per_campaign == 0)
    throw ConfigError("generator sizes must be positive");
  if (follow_density < 0 || campaign_size_spread < 0)
    throw ConfigError("generator densities must be non-negative");
  const auto n_spam =
      static_cast<std::size_t>(std::llround(spam_prevalence * static_cast<double>(n_messages)));
  if (n_spam > 0 && n_campaigns == 0) throw ConfigError("spam requested but no campaigns");
  if (n_campaigns * 2 > n_spam)
    throw ConfigError("infeasible generator config: " + std::to_string(n_campaigns) +
                      " campaigns need at least " + std::to_string(n_campaigns * 2) +
                      " spam messages, budget is " + std::to_string(n_spam));
}

namespace {

constexpr const char* kOnsets[] = {"b", "c", "d", "f", "g", "h", "j", "k", "l", "m", "n",
                                   "p", "r", "s", "t", "v", "w", "z", "br", "st", "tr", "ch"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ee"};
constexpr const char* kCodas[] = {"", "", "n", "r", "s", "t", "l", "ck", "x"};

std::vector<std::string> make_vocab(Rng& rng, std::size_t n, std::set<std::string>& taken) {
  std::vector<std::string> words;
  while (words.size() < n) {
    const int syllables = static_cast<int>(rng.between(1, 3));
    std::string w;
    for (int s = 0; s < syllables; ++s) {
      w += kOnsets[rng.below(std::size(kOnsets))];
      w += kVowels[rng.below(std::size(kVowels))];
    }
    w += kCodas[rng.below(std::size(kCodas))];
    if (taken.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// Zipf-like pick: index i chosen with weight 1/(i+1)^0.8.
class ZipfPicker {
 public:
  ZipfPicker(std::size_t n, double s) : cdf_(n) {
    double acc = 0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += 1.0 / std::pow(static_cast<double>(i + 1), s);
      cdf_[i] = acc;
    }
  }
  std::size_t pick(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    return static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

constexpr const char* kHamPhrases[] = {"nice track",    "love this",       "great set",
                                       "so good",       "thanks for sharing", "this is fire",
                                       "wow",           "amazing work",    "can't stop listening",
                                       "beautiful"};
constexpr const char* kHamLexicon[] = {"love", "nice", "great", "beautiful", "good", "cool",
                                       "sad", "boring", "weird", "happy"};
constexpr const char* kSpamLexicon[] = {"free", "win", "amazing", "exclusive", "guaranteed",
                                        "instant", "cheap", "lucky", "urgent", "best"};

struct Draft {
  std::int64_t timestamp;
  std::string user;
  std::string text;
  std::optional<std::string> target;
  bool retweet = false;
  bool spam = false;
  int campaign = -1;
};

}  // namespace

SyntheticDataset generate(const GeneratorConfig& cfg) {
  cfg.validate();
  Rng root(cfg.seed);
  Rng vocab_rng = root.fork(1), ham_rng = root.fork(3),
      spam_rng = root.fork(4), graph_rng = root.fork(5);

  std::set<std::string> taken;
  const auto shared = make_vocab(vocab_rng, cfg.shared_vocab_size, taken);
  const auto ham_words = make_vocab(vocab_rng, cfg.ham_vocab_size, taken);
  const auto spam_words = make_vocab(vocab_rng, cfg.spam_vocab_size, taken);
  const ZipfPicker shared_pick(shared.size(), 0.8), ham_pick(ham_words.size(), 0.8),
      spam_pick(spam_words.size(), 0.8), user_pick(cfg.n_users, 0.6);

  const auto n_spam = static_cast<std::size_t>(
      std::llround(cfg.spam_prevalence * static_cast<double>(cfg.n_messages)));
  const std::size_t n_ham = cfg.n_messages - n_spam;
  const auto span = static_cast<std::int64_t>(cfg.n_messages) * 10;
  const std::size_t n_tracks = std::max<std::size_t>(1, cfg.n_messages / 40);

  auto user_name = [](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "u%05zu", i);
    return std::string(buf);
  };
  auto track_name = [](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "t%04zu", i);
    return std::string(buf);
  };
  auto ham_token = [&](Rng& rng) -> const std::string& {
    return rng.bernoulli(0.45) ? shared[shared_pick.pick(rng)] : ham_words[ham_pick.pick(rng)];
  };

  std::vector<Draft> drafts;
  drafts.reserve(cfg.n_messages);

  // Ordinary traffic.
  for (std::size_t i = 0; i < n_ham; ++i) {
    Draft d;
    d.timestamp = ham_rng.between(0, span - 1);
    d.user = user_name(user_pick.pick(ham_rng));
    std::vector<std::string> toks;
    if (ham_rng.bernoulli(0.06)) {
      toks.emplace_back(kHamPhrases[ham_rng.below(std::size(kHamPhrases))]);
    } else {
      const auto len = ham_rng.between(3, 12);
      for (std::int64_t k = 0; k < len; ++k) toks.push_back(ham_token(ham_rng));
      if (ham_rng.bernoulli(0.3)) toks.emplace_back(kHamLexicon[ham_rng.below(std::size(kHamLexicon))]);
      if (ham_rng.bernoulli(0.04))
        toks.emplace_back(kSpamLexicon[ham_rng.below(std::size(kSpamLexicon))]);
    }
    if (ham_rng.bernoulli(0.2)) toks.push_back("#" + shared[ham_rng.below(60)]);
    if (ham_rng.bernoulli(0.2)) toks.push_back("@" + user_name(user_pick.pick(ham_rng)));
    if (ham_rng.bernoulli(0.12))
      toks.push_back("http://site" + std::to_string(ham_rng.below(150)) + ".example/page");
    for (std::size_t k = 0; k < toks.size(); ++k) d.text += (k ? " " : "") + toks[k];
    d.target = track_name(ham_rng.below(n_tracks));
    d.retweet = ham_rng.bernoulli(0.1);
    drafts.push_back(std::move(d));
  }

  // Campaign sizes by largest remainder over random weights, at least 2 each.
  std::vector<std::size_t> sizes(cfg.n_campaigns, 2);
  if (cfg.n_campaigns > 0) {
    std::vector<double> w(cfg.n_campaigns);
    for (double& x : w) x = 1.0 + cfg.campaign_size_spread * spam_rng.uniform();
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    const std::size_t extra = n_spam - 2 * cfg.n_campaigns;
    std::vector<std::pair<double, std::size_t>> rema;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < cfg.n_campaigns; ++c) {
      const double share = w[c] / total * static_cast<double>(extra);
      const auto whole = static_cast<std::size_t>(std::floor(share));
      sizes[c] += whole;
      assigned += whole;
      rema.emplace_back(-(share - static_cast<double>(whole)), c);
    }
    std::sort(rema.begin(), rema.end());
    for (std::size_t k = 0; assigned < extra; ++k, ++assigned) ++sizes[rema[k].second];
  }

  std::vector<std::string> spam_accounts;
  std::set<std::string> seen_templates;
  for (std::size_t c = 0; c < cfg.n_campaigns; ++c) {
    std::vector<std::string> accounts;
    for (std::size_t a = 0; a < cfg.accounts_per_campaign; ++a) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "s%03zu_%zu", c, a);
      accounts.emplace_back(buf);
      spam_accounts.emplace_back(buf);
    }
    std::vector<std::string> tmpl;
    std::string tmpl_key;
    do {
      tmpl.clear();
      const auto len = spam_rng.between(5, 10);
      for (std::int64_t k = 0; k < len; ++k)
        tmpl.push_back(spam_rng.bernoulli(cfg.feature_noise) ? ham_token(spam_rng)
                                                              : spam_words[spam_pick.pick(spam_rng)]);
      if (spam_rng.bernoulli(1.0 - cfg.feature_noise * 0.5))
        tmpl.emplace_back(kSpamLexicon[spam_rng.below(std::size(kSpamLexicon))]);
      tmpl_key.clear();
      for (const auto& t : tmpl) tmpl_key += t + " ";
    } while (!seen_templates.insert(tmpl_key).second);
    const std::string link =
        "http://promo" + std::to_string(c) + ".example/" + spam_words[spam_rng.below(spam_words.size())];
    const std::string tag = spam_words[spam_rng.below(spam_words.size())];
    const double link_prob = 1.0 - 0.5 * cfg.feature_noise;
    const auto start = spam_rng.between(0, span - 1);
    const auto burst = std::max<std::int64_t>(1, static_cast<std::int64_t>(cfg.campaign_burst *
                                                                          static_cast<double>(span)));
    const bool uses_tag = spam_rng.bernoulli(0.5);
    // Verbatim copies repeat the whole message, tag and link included.
    std::vector<std::string> verbatim = tmpl;
    if (uses_tag) verbatim.push_back("#" + tag);
    if (spam_rng.bernoulli(link_prob)) verbatim.push_back(link);

    for (std::size_t k = 0; k < sizes[c]; ++k) {
      Draft d;
      d.spam = true;
      d.campaign = static_cast<int>(c);
      d.timestamp = std::min<std::int64_t>(span - 1, start + spam_rng.between(0, burst));
      d.user = spam_rng.bernoulli(cfg.compromised_account_prob)
                   ? user_name(spam_rng.below(cfg.n_users))
                   : accounts[spam_rng.below(accounts.size())];
      std::vector<std::string> toks;
      if (spam_rng.bernoulli(cfg.text_reuse_prob)) {
        toks = verbatim;
      } else {
        toks = tmpl;
        const auto edits = spam_rng.between(1, 2);
        for (std::int64_t e = 0; e < edits; ++e)
          toks[spam_rng.below(toks.size())] = spam_rng.bernoulli(0.5)
                                                  ? spam_words[spam_pick.pick(spam_rng)]
                                                  : ham_token(spam_rng);
        toks.push_back(ham_token(spam_rng));
        if (uses_tag && spam_rng.bernoulli(0.7)) toks.push_back("#" + tag);
        if (spam_rng.bernoulli(0.3)) toks.push_back("@" + user_name(user_pick.pick(spam_rng)));
        if (spam_rng.bernoulli(link_prob)) {
          toks.push_back(spam_rng.bernoulli(cfg.link_reuse_prob)
                             ? link
                             : "http://x" + std::to_string(spam_rng.below(1000000)) + ".example/go");
        }
      }
      for (std::size_t t = 0; t < toks.size(); ++t) d.text += (t ? " " : "") + toks[t];
      d.target = track_name(spam_rng.below(n_tracks));
      d.retweet = spam_rng.bernoulli(0.05);
      drafts.push_back(std::move(d));
    }
  }

  // Chronological order; ids follow time like sequential post ids.
  std::vector<std::size_t> order(drafts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return drafts[a].timestamp < drafts[b].timestamp;
  });

  SyntheticDataset out;
  out.messages.reserve(drafts.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    Draft& d = drafts[order[k]];
    Message m;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "m%07zu", k);
    m.id = buf;
    m.user_id = std::move(d.user);
    m.text = std::move(d.text);
    m.timestamp = d.timestamp;
    m.target_id = std::move(d.target);
    m.is_retweet = d.retweet;
    m.label = d.spam ? Label::kSpam : Label::kHam;
    annotate_from_text(m);
    out.messages.push_back(std::move(m));
    out.campaign.push_back(d.campaign);
  }

  // Follower graph: ordinary users follow popular users; spam accounts are
  // sparsely connected and rarely followed back.
  std::set<std::pair<std::string, std::string>> edges;
  for (std::size_t u = 0; u < cfg.n_users; ++u) {
    const auto k = static_cast<std::int64_t>(graph_rng.uniform(0.0, 2.0 * cfg.follow_density));
    for (std::int64_t e = 0; e < k; ++e) {
      const std::size_t v = user_pick.pick(graph_rng);
      if (v != u) edges.emplace(user_name(u), user_name(v));
    }
    if (!spam_accounts.empty() && graph_rng.bernoulli(0.02 + 0.1 * cfg.feature_noise))
      edges.emplace(user_name(u), spam_accounts[graph_rng.below(spam_accounts.size())]);
  }
  for (const auto& s : spam_accounts) {
    const auto k = graph_rng.between(0, 3);
    for (std::int64_t e = 0; e < k; ++e)
      edges.emplace(s, user_name(user_pick.pick(graph_rng)));
  }
  out.follows.assign(edges.begin(), edges.end());
  return out;
}

}  // namespace eggs
