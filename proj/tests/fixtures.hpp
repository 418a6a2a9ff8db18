#pragma once

// Random instances shared by the unit tests and the acceptance binary.

#include <string>
#include <vector>

#include "eggs/factor_graph.hpp"
#include "eggs/hinge_mrf.hpp"
#include "eggs/rng.hpp"

namespace fixture {

/// Tree-structured factor graph with `n` variables. Each new variable hangs
/// off a random existing one of the other kind, so message and hub
/// variables alternate along every path.
inline eggs::FactorGraph random_tree(eggs::Rng& rng, std::size_t n) {
  eggs::FactorGraph g;
  auto prior = [&] {
    const double p = rng.uniform(0.05, 0.95);
    return std::array<double, 2>{1.0 - p, p};
  };
  g.add_variable(eggs::VarKind::kMessage, "v0", prior());
  for (std::size_t i = 1; i < n; ++i) {
    const std::size_t parent = rng.below(i);
    const bool parent_is_message = g.variables()[parent].kind == eggs::VarKind::kMessage;
    const std::string id = "v" + std::to_string(i);
    const std::size_t v = parent_is_message
                              ? g.add_variable(eggs::VarKind::kHub, id, {0.5, 0.5})
                              : g.add_variable(eggs::VarKind::kMessage, id, prior());
    const double eps = rng.uniform(0.01, 0.49);
    if (parent_is_message)
      g.add_factor(parent, v, eps, eggs::Relation::kUser);
    else
      g.add_factor(v, parent, eps, eggs::Relation::kUser);
  }
  return g;
}

/// Small HL-MRF in rule form: every variable carries an (a) and a (b) hinge,
/// so the squared objective is strictly convex, plus random two-variable
/// implication hinges in both directions.
inline eggs::GroundHingeModel random_hinge_model(eggs::Rng& rng, std::size_t n_vars, int exponent = 2) {
  eggs::GroundHingeModel m;
  for (std::size_t i = 0; i < n_vars; ++i) {
    m.variables.push_back({eggs::VarKind::kMessage, "x" + std::to_string(i), rng.uniform(), false});
    eggs::GroundHinge a;
    a.terms = {{i, 1.0}};
    a.weight = rng.uniform(0.1, 2.0);
    a.exponent = exponent;
    a.rule = eggs::Rule::kNegativePrior;
    m.hinges.push_back(a);
    eggs::GroundHinge b;
    b.terms = {{i, -1.0}};
    b.constant = rng.uniform();
    b.weight = rng.uniform(0.1, 2.0);
    b.exponent = exponent;
    b.rule = eggs::Rule::kPositivePrior;
    m.hinges.push_back(b);
  }
  for (std::size_t i = 0; i < n_vars; ++i)
    for (std::size_t j = 0; j < n_vars; ++j) {
      if (i == j || !rng.bernoulli(0.6)) continue;
      eggs::GroundHinge h;
      h.terms = {{i, 1.0}, {j, -1.0}};
      h.constant = rng.uniform(-0.3, 0.3);
      h.weight = rng.uniform(0.1, 3.0);
      h.exponent = exponent;
      h.rule = eggs::Rule::kMessageToHub;
      m.hinges.push_back(h);
    }
  return m;
}

}  // namespace fixture
