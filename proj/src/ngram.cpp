#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "eggs/error.hpp"
#include "eggs/features.hpp"
#include "eggs/log.hpp"
#include "eggs/text.hpp"

namespace eggs {

std::vector<std::string> char_ngrams(std::string_view t, int n) {
  std::vector<std::string> out;
  if (n <= 0) return out;
  const auto scalars = text::split_scalars(text::normalize(t));
  const auto un = static_cast<std::size_t>(n);
  if (scalars.size() < un) return out;
  out.reserve(scalars.size() - un + 1);
  for (std::size_t i = 0; i + un <= scalars.size(); ++i) {
    std::string g;
    for (std::size_t k = 0; k < un; ++k) g += scalars[i + k];
    out.push_back(std::move(g));
  }
  return out;
}

NgramVocabulary fit_ngram_vocabulary(std::span<const std::string> train_texts, int n,
                                     std::size_t top_k) {
  std::unordered_map<std::string, std::size_t> freq;
  for (const auto& t : train_texts)
    for (auto& g : char_ngrams(t, n)) ++freq[std::move(g)];

  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > top_k) ranked.resize(top_k);

  NgramVocabulary vocab;
  vocab.n = n;
  for (auto& [g, _] : ranked) {
    vocab.index.emplace(g, vocab.grams.size());
    vocab.grams.push_back(std::move(g));
  }
  if (vocab.empty()) log::warn("n-gram vocabulary is empty; no n-gram columns will be produced");
  return vocab;
}

std::vector<std::size_t> ngram_features(std::string_view t, const NgramVocabulary& vocab) {
  std::vector<std::size_t> out;
  if (vocab.empty()) return out;
  for (const auto& g : char_ngrams(t, vocab.n)) {
    auto it = vocab.index.find(g);
    if (it != vocab.index.end()) out.push_back(it->second);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_vocabulary(std::ostream& out, const NgramVocabulary& vocab) {
  nlohmann::ordered_json j;
  j["format"] = "eggs-ngram-vocabulary";
  j["version"] = 1;
  j["n"] = vocab.n;
  j["grams"] = vocab.grams;
  out << j.dump() << '\n';
}

NgramVocabulary read_vocabulary(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "eggs-ngram-vocabulary")
    throw DataError("not an n-gram vocabulary document");
  NgramVocabulary v;
  v.n = j.at("n").get<int>();
  v.grams = j.at("grams").get<std::vector<std::string>>();
  for (std::size_t i = 0; i < v.grams.size(); ++i) v.index.emplace(v.grams[i], i);
  return v;
}

}  // namespace eggs
