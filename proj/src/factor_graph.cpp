#include "eggs/factor_graph.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "eggs/error.hpp"
#include "eggs/format.hpp"
#include "eggs/log.hpp"

namespace eggs {

std::size_t FactorGraph::add_variable(VarKind kind, std::string id, std::array<double, 2> unary) {
  for (double u : unary)
    if (!(u > 0.0) || !std::isfinite(u))
      throw ConfigError("unary potential for '" + id + "' must be positive and finite");
  if (by_id_.count(id)) throw ConfigError("duplicate variable id '" + id + "'");
  by_id_.emplace(id, vars_.size());
  vars_.push_back(VariableNode{kind, std::move(id), unary});
  adjacency_.emplace_back();
  return vars_.size() - 1;
}

std::size_t FactorGraph::add_factor(std::size_t message_var, std::size_t hub_var, double epsilon,
                                    Relation relation) {
  if (!(epsilon > 0.0 && epsilon < 0.5))
    throw ConfigError("epsilon must lie in (0, 0.5), got " + format_double(epsilon));
  if (message_var >= vars_.size() || hub_var >= vars_.size())
    throw ConfigError("factor endpoint out of range");
  if (vars_[message_var].kind != VarKind::kMessage || vars_[hub_var].kind != VarKind::kHub)
    throw ConfigError("factors must join a message variable to a hub variable");
  factors_.push_back(PairwiseFactor{message_var, hub_var, epsilon, relation});
  adjacency_[message_var].push_back(factors_.size() - 1);
  adjacency_[hub_var].push_back(factors_.size() - 1);
  return factors_.size() - 1;
}

std::size_t FactorGraph::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? npos : it->second;
}

std::string hub_id(const Group& g) {
  return "hub:" + std::string(relation_name(g.relation)) + ":" + g.key;
}

FactorGraph build_factor_graph(const Predictions& priors, const GroupSet& groups,
                               const EpsilonMap& epsilons, const BuildOptions& opts) {
  for (const auto& [r, eps] : epsilons)
    if (!(eps > 0.0 && eps < 0.5))
      throw ConfigError("epsilon for relation '" + std::string(relation_name(r)) +
                        "' must lie in (0, 0.5)");
  FactorGraph g;
  std::size_t clamped = 0;
  auto message_var = [&](const std::string& id) {
    if (auto v = g.find(id); v != FactorGraph::npos) return v;
    auto it = priors.find(id);
    if (it == priors.end()) throw DataError("no prior for grouped message '" + id + "'");
    double p = it->second;
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("prior for '" + id + "' outside [0, 1]");
    const double c = std::clamp(p, opts.clamp, 1.0 - opts.clamp);
    if (c != p) ++clamped;
    return g.add_variable(VarKind::kMessage, id, {1.0 - c, c});
  };
  for (const auto& grp : groups.groups) {
    auto eit = epsilons.find(grp.relation);
    const double eps = eit == epsilons.end() ? kDefaultEpsilon : eit->second;
    std::vector<std::size_t> members;
    for (const auto& id : grp.member_ids) members.push_back(message_var(id));
    const std::size_t hub = g.add_variable(VarKind::kHub, hub_id(grp), {0.5, 0.5});
    for (std::size_t m : members) g.add_factor(m, hub, eps, grp.relation);
  }
  if (clamped > 0 && opts.warn_on_clamp)
    log::warn(std::to_string(clamped) + " priors clamped away from 0/1");
  return g;
}

BpResult loopy_bp(const FactorGraph& g, const BpOptions& opts) {
  const auto& vars = g.variables();
  const auto& facs = g.factors();
  const std::size_t nv = vars.size(), nf = facs.size();

  // to_msg[f] / to_hub[f]: current normalized factor-to-variable messages.
  std::vector<std::array<double, 2>> to_msg(nf, {0.5, 0.5}), to_hub(nf, {0.5, 0.5});
  std::vector<std::array<double, 2>> new_msg(nf), new_hub(nf);
  std::vector<std::array<double, 2>> logb(nv);

  auto compute_log_beliefs = [&] {
    for (std::size_t v = 0; v < nv; ++v) {
      logb[v] = {std::log(vars[v].unary[0]), std::log(vars[v].unary[1])};
      for (std::size_t f : g.factors_of(v)) {
        const auto& m = facs[f].message_var == v ? to_msg[f] : to_hub[f];
        logb[v][0] += std::log(m[0]);
        logb[v][1] += std::log(m[1]);
      }
    }
  };
  // Belief of v with factor f's contribution removed, as probabilities.
  auto cavity = [&](std::size_t v, const std::array<double, 2>& incoming) {
    const double a = logb[v][0] - std::log(incoming[0]);
    const double b = logb[v][1] - std::log(incoming[1]);
    const double mx = std::max(a, b);
    return std::array<double, 2>{std::exp(a - mx), std::exp(b - mx)};
  };
  auto send = [](const PairwiseFactor& f, const std::array<double, 2>& c) {
    // Σ_s ψ(t, s) c[s], normalized; ψ is symmetric so direction is irrelevant.
    std::array<double, 2> out{f.potential(0, 0) * c[0] + f.potential(0, 1) * c[1],
                              f.potential(1, 0) * c[0] + f.potential(1, 1) * c[1]};
    const double z = out[0] + out[1];
    return std::array<double, 2>{out[0] / z, out[1] / z};
  };

  BpResult res;
  for (int it = 0; it < opts.max_iters; ++it) {
    compute_log_beliefs();
    double delta = 0;
    for (std::size_t f = 0; f < nf; ++f) {
      const auto& fac = facs[f];
      const auto to_h = send(fac, cavity(fac.message_var, to_msg[f]));
      const auto to_m = send(fac, cavity(fac.hub_var, to_hub[f]));
      for (int s = 0; s < 2; ++s) {
        new_hub[f][s] = (1.0 - opts.damping) * to_h[s] + opts.damping * to_hub[f][s];
        new_msg[f][s] = (1.0 - opts.damping) * to_m[s] + opts.damping * to_msg[f][s];
      }
      for (auto* m : {&new_hub[f], &new_msg[f]}) {
        const double z = (*m)[0] + (*m)[1];
        (*m)[0] /= z;
        (*m)[1] /= z;
      }
      delta = std::max({delta, std::abs(new_hub[f][1] - to_hub[f][1]),
                        std::abs(new_msg[f][1] - to_msg[f][1])});
    }
    to_msg.swap(new_msg);
    to_hub.swap(new_hub);
    res.iterations = it + 1;
    res.last_delta = delta;
    if (delta < opts.tol) {
      res.converged = true;
      break;
    }
  }
  if (nf == 0) res.converged = true;
  compute_log_beliefs();
  res.marginals.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    // P(spam) = 1 / (1 + exp(log b0 - log b1))
    res.marginals[v] = 1.0 / (1.0 + std::exp(logb[v][0] - logb[v][1]));
  }
  return res;
}

std::vector<double> exact_marginals(const FactorGraph& g) {
  const std::size_t n = g.variables().size();
  if (n > kExactLimit)
    throw ConfigError("exact enumeration limited to " + std::to_string(kExactLimit) +
                      " variables, graph has " + std::to_string(n));
  if (n == 0) return {};
  const auto& vars = g.variables();
  const auto& facs = g.factors();
  const std::uint64_t states = std::uint64_t{1} << n;
  std::vector<double> logw(states);
  double mx = -INFINITY;
  for (std::uint64_t s = 0; s < states; ++s) {
    double lw = 0;
    for (std::size_t v = 0; v < n; ++v) lw += std::log(vars[v].unary[(s >> v) & 1U]);
    for (const auto& f : facs)
      lw += std::log(f.potential(static_cast<int>((s >> f.hub_var) & 1U),
                                 static_cast<int>((s >> f.message_var) & 1U)));
    logw[s] = lw;
    mx = std::max(mx, lw);
  }
  double z = 0;
  std::vector<double> spam(n, 0.0);
  for (std::uint64_t s = 0; s < states; ++s) {
    const double w = std::exp(logw[s] - mx);
    z += w;
    for (std::size_t v = 0; v < n; ++v)
      if ((s >> v) & 1U) spam[v] += w;
  }
  for (double& p : spam) p /= z;
  return spam;
}

Predictions message_marginals(const FactorGraph& g, std::span<const double> marginals) {
  Predictions out;
  for (std::size_t v = 0; v < g.variables().size(); ++v)
    if (g.variables()[v].kind == VarKind::kMessage) out[g.variables()[v].id] = marginals[v];
  return out;
}

void write_factor_graph(std::ostream& out, const FactorGraph& g) {
  out << "#eggs-factor-graph\t1\n";
  const auto& vars = g.variables();
  for (std::size_t v = 0; v < vars.size(); ++v)
    out << "var\t" << v << '\t' << (vars[v].kind == VarKind::kHub ? "hub" : "message") << '\t'
        << vars[v].id << '\t' << format_double(vars[v].unary[0]) << '\t'
        << format_double(vars[v].unary[1]) << '\n';
  const auto& facs = g.factors();
  for (std::size_t f = 0; f < facs.size(); ++f) {
    const double e = facs[f].epsilon;
    out << "factor\t" << f << '\t' << facs[f].message_var << '\t' << facs[f].hub_var << '\t'
        << relation_name(facs[f].relation) << '\t' << format_double(e) << '\t'
        << format_double(1.0 - e) << ' ' << format_double(e) << ' ' << format_double(e) << ' '
        << format_double(1.0 - e) << '\n';
  }
}

}  // namespace eggs
