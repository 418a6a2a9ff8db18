#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "eggs/message.hpp"

namespace eggs {

struct GeneratorConfig {
  std::uint64_t seed = 7;
  std::size_t n_users = 2000;
  std::size_t n_messages = 20000;
  double spam_prevalence = 0.05;
  std::size_t n_campaigns = 40;
  /// Campaign sizes are proportional to weights drawn from U(1, 1 + size_spread).
  double campaign_size_spread = 2.0;
  std::size_t accounts_per_campaign = 3;
  /// Chance a spam message is posted from a compromised ordinary account.
  double compromised_account_prob = 0.3;
  /// Campaign duration as a fraction of the whole time span.
  double campaign_burst = 0.1;
  double text_reuse_prob = 0.6;
  double link_reuse_prob = 0.5;
  /// Mean number of accounts each ordinary user follows.
  double follow_density = 8.0;
  std::size_t ham_vocab_size = 3000;
  std::size_t spam_vocab_size = 400;
  std::size_t shared_vocab_size = 600;
  /// Fraction of spam tokens and behaviour drawn from the ordinary-user distribution.
  double feature_noise = 0.8;

  /// Throws ConfigError when a field is out of range or the config is infeasible.
  void validate() const;
};

struct SyntheticDataset {
  std::vector<Message> messages;  // chronological
  std::vector<std::pair<std::string, std::string>> follows;
  /// Campaign index per message, -1 for ham.
  std::vector<int> campaign;
};

SyntheticDataset generate(const GeneratorConfig& config);

}  // namespace eggs
