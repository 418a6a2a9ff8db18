#include <doctest.h>

#include <sstream>

#include "eggs/error.hpp"
#include "eggs/hinge_mrf.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace eggs;

namespace {

Message msg(std::string id, std::string user, std::string text, std::int64_t ts = 0) {
  Message m;
  m.id = std::move(id);
  m.user_id = std::move(user);
  m.text = std::move(text);
  m.timestamp = ts;
  annotate_from_text(m);
  return m;
}

MapOptions precise() {
  MapOptions o;
  o.tol = 1e-12;
  o.max_iter = 200000;
  return o;
}

// n messages from one user, all with the same prior.
GroundHingeModel one_group(std::size_t n, double prior) {
  std::vector<Message> ms;
  Predictions priors;
  for (std::size_t i = 0; i < n; ++i) {
    ms.push_back(msg("m" + std::to_string(i), "u", "t" + std::to_string(i)));
    priors[ms.back().id] = prior;
  }
  return ground_rules(priors, build_groups(ms, {Relation::kUser}), {});
}

}  // namespace

TEST_CASE("grounding: two hinges per message and two per membership") {
  std::vector<Message> ms;
  Predictions priors;
  for (int i = 0; i < 100; ++i) {
    ms.push_back(msg("m" + std::to_string(i), "u" + std::to_string(i), "go http://spam.example/x"));
    priors[ms.back().id] = 0.3;
  }
  auto model = ground_rules(priors, build_groups(ms, {Relation::kLink}), {});
  std::map<Rule, int> by_rule;
  for (const auto& h : model.hinges) ++by_rule[h.rule];
  CHECK(by_rule[Rule::kNegativePrior] == 100);
  CHECK(by_rule[Rule::kPositivePrior] == 100);
  CHECK(by_rule[Rule::kMessageToHub] == 100);
  CHECK(by_rule[Rule::kHubToMessage] == 100);
  CHECK(model.variables.size() == 101);
  CHECK(model.variables.back().kind == VarKind::kHub);
  CHECK(model.variables.back().init == doctest::Approx(0.3));
}

TEST_CASE("grounding: hand example of hinge values") {
  std::vector<Message> ms{msg("a", "u", "x"), msg("b", "u", "y")};
  RuleWeights w;
  w.negative_prior = 0.5;
  w.hub_to_message[Relation::kUser] = 2.0;
  auto model = ground_rules({{"a", 0.8}, {"b", 0.2}}, build_groups(ms, {Relation::kUser}), w);
  REQUIRE(model.variables.size() == 3);
  const std::vector<double> x{0.6, 0.1, 0.4};  // a, b, hub
  // (a) 0.5*0.6² + 0.5*0.1²; (b) (0.8-0.6)² + (0.2-0.1)²;
  // (c) (0.6-0.4)² + 0; (d) 2*(0 + (0.4-0.1)²)
  const double expected = 0.5 * 0.36 + 0.5 * 0.01 + 0.04 + 0.01 + 0.04 + 2 * 0.09;
  CHECK(model.objective(x) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(oracle::hinge_objective(model, x) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("observed messages are held fixed") {
  std::vector<Message> ms{msg("a", "u", "x"), msg("b", "u", "y")};
  const Predictions observed{{"a", 1.0}};
  auto model = ground_rules({{"a", 0.2}, {"b", 0.2}}, build_groups(ms, {Relation::kUser}), {}, 2,
                            &observed);
  auto res = map_inference(model);
  CHECK(res.x[model.find("a")] == 1.0);
  // b is pulled up by the spam neighbour above its unary optimum of 0.1.
  CHECK(res.x[model.find("b")] > 0.1 + 0.05);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(8);
  for (int rep = 0; rep < 40; ++rep) {
    auto m = fixture::random_hinge_model(rng, 1 + rng.below(3));
    std::vector<double> x(m.variables.size()), g;
    for (double& v : x) v = rng.uniform(0.0, 1.0);
    m.gradient(x, g);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double h = 1e-5;
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (m.objective(xp) - m.objective(xm)) / (2 * h);
      CHECK(std::abs(g[i] - fd) <= 1e-4 * std::max({std::abs(fd), std::abs(g[i]), 1e-3}));
    }
  }
}

TEST_CASE("MAP matches the grid oracle on small instances") {
  Rng rng(12);
  for (int rep = 0; rep < 15; ++rep) {
    auto m = fixture::random_hinge_model(rng, 1 + rng.below(3));
    auto res = map_inference(m);
    auto ref = oracle::grid_map(m);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      CHECK(std::abs(res.x[i] - ref[i]) < 1e-3);
      CHECK(res.x[i] >= 0.0);
      CHECK(res.x[i] <= 1.0);
    }
    CHECK(res.objective <= oracle::hinge_objective(m, ref) + 1e-9);
  }
}

TEST_CASE("squared objective is convex along random chords") {
  Rng rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    auto m = fixture::random_hinge_model(rng, 3);
    std::vector<double> a(3), b(3), mid(3);
    for (std::size_t i = 0; i < 3; ++i) {
      a[i] = rng.uniform();
      b[i] = rng.uniform();
      mid[i] = 0.5 * (a[i] + b[i]);
    }
    CHECK(m.objective(mid) <= 0.5 * (m.objective(a) + m.objective(b)) + 1e-12);
  }
}

TEST_CASE("saturated group: another satisfied member changes nothing") {
  for (double prior : {0.6, 0.9}) {
    auto small = one_group(4, prior);
    auto big = one_group(5, prior);
    auto rs = map_inference(small, precise());
    auto rb = map_inference(big, precise());
    for (const auto& h : small.hinges)
      if (h.rule == Rule::kHubToMessage) CHECK(h.linear(rs.x) <= 1e-6);
    for (int i = 0; i < 4; ++i) {
      const auto id = "m" + std::to_string(i);
      CHECK(std::abs(rs.x[small.find(id)] - rb.x[big.find(id)]) <= 1e-6);
    }
  }
}

TEST_CASE("ungrouped closed form agrees with the solver") {
  for (int p : {1, 2}) {
    for (double prior : {0.0, 0.3, 0.95}) {
      RuleWeights w;
      w.negative_prior = 0.4;
      w.positive_prior = 1.3;
      GroundHingeModel m;
      m.variables.push_back({VarKind::kMessage, "m", prior, false});
      m.hinges.push_back({{{0, 1.0}}, 0.0, w.negative_prior, p, Rule::kNegativePrior, Relation::kUser, ""});
      m.hinges.push_back({{{0, -1.0}}, prior, w.positive_prior, p, Rule::kPositivePrior, Relation::kUser, ""});
      auto res = map_inference(m, precise());
      CHECK(res.x[0] == doctest::Approx(unary_map_score(prior, w, p)).epsilon(1e-6));
    }
  }
  RuleWeights w;
  CHECK(unary_map_score(0.8, w, 2) == doctest::Approx(0.4));
}

TEST_CASE("linear hinges reach the grid optimum too") {
  Rng rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    auto m = fixture::random_hinge_model(rng, 2, 1);
    auto res = map_inference(m, precise());
    auto ref = oracle::grid_map(m);
    CHECK(res.objective <= oracle::hinge_objective(m, ref) + 1e-4);
  }
}

TEST_CASE("invalid weights and exponents are rejected") {
  std::vector<Message> ms{msg("a", "u", "x"), msg("b", "u", "y")};
  auto gs = build_groups(ms, {Relation::kUser});
  RuleWeights w;
  w.positive_prior = -1;
  CHECK_THROWS_AS(ground_rules({{"a", 0.5}, {"b", 0.5}}, gs, w), ConfigError);
  CHECK_THROWS_AS(ground_rules({{"a", 0.5}, {"b", 0.5}}, gs, {}, 3), ConfigError);
  CHECK_THROWS_AS(ground_rules({{"a", 0.5}}, gs, {}), DataError);
}

TEST_CASE("weight learning raises the weight of rules the labels agree with") {
  // Users are pure: every user posts only spam or only ham, but priors are
  // uninformative, so the hub-to-message rule explains the labels.
  std::vector<Message> ms;
  Predictions priors;
  Rng rng(2);
  for (int i = 0; i < 60; ++i) {
    const int u = i % 6;
    ms.push_back(msg("m" + std::to_string(100 + i), "u" + std::to_string(u), "t" + std::to_string(i), i));
    ms.back().label = u < 2 ? Label::kSpam : Label::kHam;
    priors[ms.back().id] = u < 2 ? rng.uniform(0.3, 0.6) : rng.uniform(0.2, 0.5);
  }
  auto gs = build_groups(ms, {Relation::kUser});
  LearnOptions opts;
  opts.steps = 10;
  auto a = learn_weights({}, ms, gs, priors, opts);
  auto b = learn_weights({}, ms, gs, priors, opts);
  CHECK(a.trace.size() == 10);
  CHECK(a.weights.d(Relation::kUser) == b.weights.d(Relation::kUser));
  CHECK(a.weights.d(Relation::kUser) >= 1.0);
  CHECK(a.weights.negative_prior >= 0.0);
  CHECK(a.weights.positive_prior >= 0.0);

  std::stringstream ss;
  write_rule_weights(ss, a.weights, 2, "test");
  int p = 0;
  auto back = read_rule_weights(ss, &p);
  CHECK(p == 2);
  CHECK(back.d(Relation::kUser) == a.weights.d(Relation::kUser));
  CHECK(back.negative_prior == a.weights.negative_prior);
}

TEST_CASE("learning without steps or labels returns the initial weights") {
  std::vector<Message> ms{msg("a", "u", "x", 0), msg("b", "u", "y", 1)};
  auto gs = build_groups(ms, {Relation::kUser});
  const Predictions priors{{"a", 0.4}, {"b", 0.6}};
  RuleWeights init;
  init.positive_prior = 2.5;
  LearnOptions opts;
  opts.steps = 0;
  ms[0].label = Label::kSpam;
  CHECK(learn_weights(init, ms, gs, priors, opts).weights.positive_prior == 2.5);
  ms[0].label.reset();
  opts.steps = 5;
  CHECK(learn_weights(init, ms, gs, priors, opts).weights.positive_prior == 2.5);
}
