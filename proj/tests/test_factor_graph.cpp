#include <doctest.h>

#include <sstream>

#include "eggs/error.hpp"
#include "eggs/factor_graph.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eggs;

namespace {

Message msg(std::string id, std::string user, std::string text) {
  Message m;
  m.id = std::move(id);
  m.user_id = std::move(user);
  m.text = std::move(text);
  annotate_from_text(m);
  return m;
}

BpOptions tight() {
  BpOptions o;
  o.max_iters = 2000;
  o.tol = 1e-13;
  return o;
}

// n messages with one shared user, all with the same prior.
std::pair<FactorGraph, std::vector<std::string>> shared_hub(std::size_t n, double prior, double eps) {
  std::vector<Message> ms;
  Predictions priors;
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("m" + std::to_string(i));
    ms.push_back(msg(ids.back(), "u", "t" + std::to_string(i)));
    priors[ids.back()] = prior;
  }
  auto gs = build_groups(ms, {Relation::kUser});
  return {build_factor_graph(priors, gs, {{Relation::kUser, eps}}), ids};
}

}  // namespace

TEST_CASE("two messages and one hub: hand enumeration") {
  std::vector<Message> ms{msg("a", "u", "x"), msg("b", "u", "y")};
  auto gs = build_groups(ms, {Relation::kUser});
  auto g = build_factor_graph({{"a", 0.8}, {"b", 0.3}}, gs, {{Relation::kUser, 0.1}});
  REQUIRE(g.variables().size() == 3);
  REQUIRE(g.factors().size() == 2);
  // Unnormalized mass with a = 1, summed over hub and b:
  //   h=0: 0.5*0.8*0.1*(0.7*0.9 + 0.3*0.1) = 0.0264
  //   h=1: 0.5*0.8*0.9*(0.7*0.1 + 0.3*0.9) = 0.1224
  // and with a = 0: 0.0594 + 0.0034.
  const double expected = 0.1488 / (0.1488 + 0.0628);
  auto exact = exact_marginals(g);
  CHECK(exact[g.find("a")] == doctest::Approx(expected).epsilon(1e-12));
  auto bp = loopy_bp(g, tight());
  CHECK(bp.converged);
  CHECK(bp.marginals[g.find("a")] == doctest::Approx(expected).epsilon(1e-9));
  auto post = message_marginals(g, bp.marginals);
  CHECK(post.size() == 2);
  CHECK(post.at("b") > 0.3);
}

TEST_CASE("BP is exact on random trees") {
  Rng rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    auto g = fixture::random_tree(rng, 2 + rng.below(14));
    auto bp = loopy_bp(g, tight());
    CHECK(bp.converged);
    auto ref = oracle::enumerate_marginals(g);
    auto exact = exact_marginals(g);
    for (std::size_t v = 0; v < ref.size(); ++v) {
      CHECK(std::abs(bp.marginals[v] - ref[v]) < 1e-6);
      CHECK(std::abs(exact[v] - ref[v]) < 1e-12);
    }
  }
}

TEST_CASE("agreeing members push each other beyond their prior") {
  double last = 0.85;
  for (std::size_t n : {2, 5, 8}) {
    auto [g, ids] = shared_hub(n, 0.85, 0.1);
    auto bp = loopy_bp(g, tight());
    auto exact = exact_marginals(g);
    const double p = bp.marginals[g.find(ids[0])];
    CHECK(p > last);
    CHECK(std::abs(p - exact[g.find(ids[0])]) < 1e-6);
    last = p;
  }
}

TEST_CASE("loopy graphs stay close to exact") {
  // Two users and two texts crossing each other form a cycle.
  std::vector<Message> ms{msg("a", "u", "x"), msg("b", "u", "y"), msg("c", "v", "x"),
                          msg("d", "v", "y")};
  auto gs = build_groups(ms, {Relation::kUser, Relation::kText});
  auto g = build_factor_graph({{"a", 0.9}, {"b", 0.2}, {"c", 0.6}, {"d", 0.4}}, gs,
                              {{Relation::kUser, 0.2}, {Relation::kText, 0.3}});
  auto bp = loopy_bp(g, tight());
  CHECK(bp.converged);
  auto exact = exact_marginals(g);
  for (std::size_t v = 0; v < exact.size(); ++v) CHECK(std::abs(bp.marginals[v] - exact[v]) < 0.05);
}

TEST_CASE("epsilon and prior validation") {
  std::vector<Message> ms{msg("a", "u", "x"), msg("b", "u", "y")};
  auto gs = build_groups(ms, {Relation::kUser});
  const Predictions priors{{"a", 0.5}, {"b", 0.5}};
  for (double eps : {0.0, 0.5, 0.7, -0.1})
    CHECK_THROWS_AS(build_factor_graph(priors, gs, {{Relation::kUser, eps}}), ConfigError);
  CHECK_THROWS_AS(build_factor_graph({{"a", 0.5}}, gs, {}), DataError);
  CHECK_THROWS_AS(build_factor_graph({{"a", 0.5}, {"b", 1.5}}, gs, {}), DataError);

  // Priors of exactly 0 or 1 are clamped, not rejected.
  auto g = build_factor_graph({{"a", 1.0}, {"b", 0.0}}, gs, {}, {kPriorClamp, false});
  CHECK(g.variables()[g.find("a")].unary[1] == doctest::Approx(1.0 - kPriorClamp));

  FactorGraph h;
  auto m = h.add_variable(VarKind::kMessage, "m", {0.5, 0.5});
  auto m2 = h.add_variable(VarKind::kMessage, "m2", {0.5, 0.5});
  CHECK_THROWS_AS(h.add_factor(m, m2, 0.1, Relation::kUser), ConfigError);
  CHECK_THROWS_AS(h.add_variable(VarKind::kHub, "z", {0.0, 1.0}), ConfigError);
}

TEST_CASE("ungrouped messages are left out of the graph") {
  std::vector<Message> ms{msg("a", "u", "x"), msg("b", "u", "y"), msg("c", "w", "z")};
  auto gs = build_groups(ms, {Relation::kUser});
  auto g = build_factor_graph({{"a", 0.5}, {"b", 0.5}, {"c", 0.9}}, gs, {});
  CHECK(g.find("c") == FactorGraph::npos);
  CHECK(g.factors()[0].epsilon == kDefaultEpsilon);
}

TEST_CASE("one hub per group: 100 members give 100 factors") {
  std::vector<Message> ms;
  Predictions priors;
  for (int i = 0; i < 100; ++i) {
    const auto id = "m" + std::to_string(i);
    ms.push_back(msg(id, "u" + std::to_string(i), "go http://spam.example/x"));
    priors[id] = 0.5;
  }
  auto gs = build_groups(ms, {Relation::kLink});
  auto g = build_factor_graph(priors, gs, {});
  CHECK(g.factors().size() == 100);
  CHECK(g.variables().size() == 101);
}

TEST_CASE("exact enumeration refuses large graphs") {
  auto [g, ids] = shared_hub(kExactLimit, 0.5, 0.1);
  CHECK(g.variables().size() > kExactLimit);
  CHECK_THROWS_AS(exact_marginals(g), ConfigError);
}

TEST_CASE("factor graph dump is deterministic") {
  auto [g, ids] = shared_hub(3, 0.7, 0.2);
  std::stringstream a, b;
  write_factor_graph(a, g);
  write_factor_graph(b, g);
  CHECK(a.str() == b.str());
  CHECK_FALSE(a.str().empty());
}
