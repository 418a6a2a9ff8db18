#include <doctest.h>

#include <sstream>

#include "eggs/error.hpp"
#include "eggs/feature_matrix.hpp"
#include "eggs/features.hpp"
#include "eggs/follower_graph.hpp"
#include "eggs/rng.hpp"
#include "oracles.hpp"

using namespace eggs;

namespace {

Message msg(std::string id, std::string user, std::string text, std::int64_t ts,
            std::optional<Label> label = std::nullopt) {
  Message m;
  m.id = std::move(id);
  m.user_id = std::move(user);
  m.text = std::move(text);
  m.timestamp = ts;
  m.label = label;
  annotate_from_text(m);
  return m;
}

std::vector<std::pair<std::string, std::string>> as_follows(const oracle::Edges& edges) {
  std::vector<std::pair<std::string, std::string>> out;
  auto name = [](int v) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "n%02d", v);
    return std::string(buf);
  };
  for (auto [u, v] : edges) out.emplace_back(name(u), name(v));
  return out;
}

oracle::Edges random_graph(Rng& rng, int n, double p) {
  oracle::Edges e;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && rng.bernoulli(p)) e.emplace_back(u, v);
  // Make every node appear so node indices line up with the oracle's.
  for (int u = 0; u + 1 < n; u += 2) e.emplace_back(u, u + 1);
  return e;
}

}  // namespace

TEST_CASE("content features count tokens and sentiment") {
  Message m = msg("m", "u", "Win free stuff http://a.io #deal @you", 0);
  m.is_retweet = true;
  auto f = extract_content_features(m);
  CHECK(f.num_chars == 37);
  CHECK(f.num_links == 1);
  CHECK(f.num_hashtags == 1);
  CHECK(f.num_mentions == 1);
  CHECK(f.is_retweet == 1);
  // "win" (0.8, 0.4) and "free" (0.4, 0.8) average.
  CHECK(f.polarity == doctest::Approx(0.6));
  CHECK(f.subjectivity == doctest::Approx(0.6));
  CHECK(lexicon_sentiment("nothing here").polarity == 0);
}

TEST_CASE("user features use only earlier messages and visible labels") {
  std::vector<Message> ms{
      msg("a", "u", "x #t", 1, Label::kSpam), msg("b", "u", "hello http://l.io", 2, Label::kSpam),
      msg("c", "v", "zz", 3, Label::kHam),    msg("d", "u", "abc", 4, Label::kSpam),
      msg("e", "u", "q", 5, Label::kHam)};
  std::vector<bool> visible{true, true, true, true, false};
  auto f = extract_user_features_sequential(ms, visible);
  CHECK(f[0].msgs == 0);
  CHECK(f[1].msgs == 1);
  CHECK(f[1].hashtag_ratio == 1.0);
  CHECK(f[3].msgs == 2);
  CHECK(f[3].hashtag_ratio == 0.5);
  CHECK(f[3].link_ratio == 0.5);
  CHECK(f[3].len_max == 17);
  CHECK(f[3].len_min == 4);
  CHECK(f[3].len_mean == doctest::Approx(10.5));
  CHECK(f[3].blacklist == 0);  // only two known spam before d
  CHECK(f[4].blacklist == 1);  // a, b, d
  CHECK(f[2].msgs == 0);

  // Hiding labels turns the blacklist off.
  auto hidden = extract_user_features_sequential(ms, {});
  CHECK(hidden[4].blacklist == 0);
  CHECK(hidden[4].msgs == 3);
}

TEST_CASE("whitelist needs ten known ham") {
  std::vector<Message> ms;
  for (int i = 0; i < 11; ++i) ms.push_back(msg("m" + std::to_string(10 + i), "u", "x", i, Label::kHam));
  auto f = extract_user_features_sequential(ms, std::vector<bool>(ms.size(), true));
  CHECK(f[9].whitelist == 0);
  CHECK(f[10].whitelist == 1);
}

TEST_CASE("track message counts") {
  std::vector<Message> ms{msg("a", "u", "x", 1), msg("b", "v", "y", 2), msg("c", "w", "z", 3)};
  ms[0].target_id = "t";
  ms[2].target_id = "t";
  auto f = extract_user_features_sequential(ms, {});
  CHECK(f[0].track_msgs == 0);
  CHECK(f[1].track_msgs == 0);
  CHECK(f[2].track_msgs == 1);
}

TEST_CASE("user features reject unsorted input") {
  std::vector<Message> ms{msg("b", "u", "x", 2), msg("a", "u", "y", 1)};
  CHECK_THROWS_AS(extract_user_features_sequential(ms, {}), DataError);
}

TEST_CASE("character n-grams and vocabulary ranking") {
  CHECK(char_ngrams("Abcd", 3) == std::vector<std::string>{"abc", "bcd"});
  CHECK(char_ngrams("ab", 3).empty());
  std::vector<std::string> texts{"aaaa", "abab"};
  // Frequencies: aaa 2, aba 1, bab 1.
  auto v = fit_ngram_vocabulary(texts, 3, 2);
  CHECK(v.grams == std::vector<std::string>{"aaa", "aba"});
  CHECK(ngram_features("xabaaa", v) == std::vector<std::size_t>{0, 1});
  CHECK(ngram_features("zzz", v).empty());

  std::stringstream ss;
  write_vocabulary(ss, v);
  auto back = read_vocabulary(ss);
  CHECK(back.grams == v.grams);
  CHECK(back.n == 3);
}

TEST_CASE("pagerank matches dense power iteration") {
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 20;
    auto edges = random_graph(rng, n, 0.08);
    auto g = build_follower_graph(as_follows(edges));
    REQUIRE(g.node_count() == static_cast<std::size_t>(n));
    auto pr = pagerank(g);
    CHECK(pr.converged);
    auto ref = oracle::dense_pagerank(n, edges);
    double sum = 0;
    for (int v = 0; v < n; ++v) {
      CHECK(std::abs(pr.scores[v] - ref[v]) < 1e-8);
      sum += pr.scores[v];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK_THROWS_AS(pagerank(FollowerGraph{}), DataError);
}

TEST_CASE("triangles and core numbers match brute force") {
  Rng rng(5);
  for (int rep = 0; rep < 5; ++rep) {
    const int n = 16;
    auto edges = random_graph(rng, n, 0.2);
    auto g = build_follower_graph(as_follows(edges));
    CHECK(triangle_count(g) == oracle::brute_triangles(n, edges));
    CHECK(k_core(g) == oracle::brute_core(n, edges));
  }
}

TEST_CASE("graph basics: triangle, degrees, self loops dropped") {
  auto g = build_follower_graph(as_follows({{0, 1}, {1, 2}, {2, 0}, {0, 0}, {0, 1}}));
  CHECK(g.edge_count() == 3);
  CHECK(triangle_count(g) == std::vector<std::size_t>{1, 1, 1});
  CHECK(k_core(g) == std::vector<std::size_t>{2, 2, 2});
  auto d = degrees(g);
  CHECK(d[0].in == 1);
  CHECK(d[0].out == 1);
}

TEST_CASE("follows and graph features round-trip") {
  auto follows = as_follows({{0, 1}, {1, 2}, {3, 1}});
  std::stringstream fs;
  write_follows(fs, follows);
  CHECK(read_follows(fs) == follows);

  auto table = compute_graph_features(build_follower_graph(follows));
  std::stringstream gs;
  write_graph_features(gs, table);
  CHECK(read_graph_features(gs) == table);
  CHECK(table.at("n01").in_degree == 2);
}

TEST_CASE("feature matrix text format round-trips") {
  ColumnDictionary dict;
  dict.add({"a", ColumnKind::kDense, "content"});
  dict.add({"b", ColumnKind::kBinary, "ngram"});
  FeatureMatrix X(dict);
  X.add_row("m1", {{0, 1.5}, {1, 1.0}});
  X.add_row("m2", {{0, 0.1 + 0.2}});
  std::stringstream ss;
  write_feature_matrix(ss, X);
  auto back = read_feature_matrix(ss);
  CHECK(back.rows() == 2);
  CHECK(back.cols() == 2);
  CHECK(back.row_ids() == X.row_ids());
  CHECK(back.value(1, 0) == 0.1 + 0.2);
  CHECK(back.dictionary().fingerprint() == dict.fingerprint());
  CHECK(back.without_families({"ngram"}).cols() == 1);
}

TEST_CASE("assemble_features families and limited mode") {
  std::vector<Message> ms{msg("a", "u", "hello world", 1, Label::kHam),
                          msg("b", "u", "hello there", 2, Label::kSpam)};
  std::vector<std::string> texts{ms[0].text};
  auto vocab = fit_ngram_vocabulary(texts, 3, 100);
  GraphFeatureTable graph;
  graph["u"] = GraphFeatures{0.5, 1, 2, 3, 4};

  FeatureConfig full;
  auto X = assemble_features(ms, {true, true}, graph, &vocab, full);
  CHECK(X.cols() == 7 + 10 + 5 + vocab.grams.size());
  CHECK(X.value(0, *X.dictionary().find("Pagerank")) == 0.5);
  CHECK(X.value(1, *X.dictionary().find("UMsgs")) == 1);

  FeatureConfig limited;
  limited.drop_families = {"ngram", "graph"};
  auto L = assemble_features(ms, {true, true}, graph, &vocab, limited);
  CHECK(L.cols() == 17);
  CHECK_FALSE(L.dictionary().find("Pagerank").has_value());
}
