#include <algorithm>

#include "eggs/features.hpp"

namespace eggs {

namespace {

bool dropped(const FeatureConfig& c, std::string_view family) {
  return std::find(c.drop_families.begin(), c.drop_families.end(), family) !=
         c.drop_families.end();
}

}  // namespace

FeatureMatrix assemble_features(std::span<const Message> messages,
                                const std::vector<bool>& label_visible,
                                const GraphFeatureTable& graph, const NgramVocabulary* vocab,
                                const FeatureConfig& config) {
  const bool want_content = !dropped(config, "content");
  const bool want_user = !dropped(config, "user");
  const bool want_graph = !dropped(config, "graph");
  const bool want_ngram = config.use_ngrams && vocab != nullptr && !dropped(config, "ngram");

  ColumnDictionary dict;
  if (want_content)
    for (const auto& [name, _] : ContentFeatures{}.named())
      dict.add({name, name == "IsRetweet" ? ColumnKind::kBinary : ColumnKind::kDense, "content"});
  if (want_user)
    for (const auto& [name, _] : UserFeatures{}.named())
      dict.add({name,
                (name == "UBlacklist" || name == "UWhitelist") ? ColumnKind::kBinary
                                                               : ColumnKind::kDense,
                "user"});
  if (want_graph)
    for (const auto& [name, _] : GraphFeatures{}.named())
      dict.add({name, ColumnKind::kDense, "graph"});
  const std::size_t ngram_base = dict.size();
  if (want_ngram)
    for (const auto& g : vocab->grams) dict.add({"ng:" + g, ColumnKind::kBinary, "ngram"});

  const auto user = want_user ? extract_user_features_sequential(messages, label_visible)
                              : std::vector<UserFeatures>{};

  FeatureMatrix X(std::move(dict));
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const Message& m = messages[i];
    std::vector<FeatureEntry> row;
    std::uint32_t col = 0;
    auto push_all = [&](const std::vector<std::pair<std::string, double>>& named) {
      for (const auto& [_, v] : named) row.push_back({col++, v});
    };
    if (want_content) push_all(extract_content_features(m).named());
    if (want_user) push_all(user[i].named());
    if (want_graph) {
      auto it = graph.find(m.user_id);
      push_all(it == graph.end() ? GraphFeatures{}.named() : it->second.named());
    }
    if (want_ngram)
      for (std::size_t g : ngram_features(m.text, *vocab))
        row.push_back({static_cast<std::uint32_t>(ngram_base + g), 1.0});
    X.add_row(m.id, std::move(row));
  }
  return X;
}

}  // namespace eggs
