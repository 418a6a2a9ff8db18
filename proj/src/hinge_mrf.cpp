#include "eggs/hinge_mrf.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "eggs/error.hpp"
#include "eggs/format.hpp"
#include "eggs/log.hpp"

namespace eggs {

std::string_view rule_name(Rule r) {
  switch (r) {
    case Rule::kNegativePrior: return "negative_prior";
    case Rule::kPositivePrior: return "positive_prior";
    case Rule::kMessageToHub: return "message_to_hub";
    case Rule::kHubToMessage: return "hub_to_message";
  }
  return "unknown";
}

double GroundHinge::linear(std::span<const double> x) const {
  double l = constant;
  for (const auto& t : terms) l += t.coef * x[t.var];
  return l;
}

double GroundHinge::potential(std::span<const double> x) const {
  const double l = linear(x);
  if (l <= 0) return 0.0;
  return exponent == 1 ? l : l * l;
}

double RuleWeights::c(Relation r) const {
  auto it = message_to_hub.find(r);
  return it == message_to_hub.end() ? 1.0 : it->second;
}

double RuleWeights::d(Relation r) const {
  auto it = hub_to_message.find(r);
  return it == hub_to_message.end() ? 1.0 : it->second;
}

void RuleWeights::validate() const {
  auto check = [](double w, const std::string& what) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw ConfigError("rule weight '" + what + "' must be finite and non-negative");
  };
  check(negative_prior, "negative_prior");
  check(positive_prior, "positive_prior");
  for (const auto& [r, w] : message_to_hub) check(w, "c:" + std::string(relation_name(r)));
  for (const auto& [r, w] : hub_to_message) check(w, "d:" + std::string(relation_name(r)));
}

double GroundHingeModel::objective(std::span<const double> x) const {
  double f = 0;
  for (const auto& h : hinges) f += h.weight * h.potential(x);
  return f;
}

void GroundHingeModel::gradient(std::span<const double> x, std::vector<double>& out) const {
  out.assign(variables.size(), 0.0);
  for (const auto& h : hinges) {
    const double l = h.linear(x);
    if (l <= 0) continue;
    const double scale = h.weight * (h.exponent == 1 ? 1.0 : 2.0 * l);
    for (const auto& t : h.terms) out[t.var] += scale * t.coef;
  }
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].fixed) out[i] = 0.0;
}

std::vector<double> GroundHingeModel::initial_state() const {
  std::vector<double> x(variables.size());
  for (std::size_t i = 0; i < variables.size(); ++i) x[i] = variables[i].init;
  return x;
}

std::size_t GroundHingeModel::find(const std::string& id) const {
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (variables[i].id == id) return i;
  return FactorGraph::npos;
}

GroundHingeModel ground_rules(const Predictions& priors, const GroupSet& groups,
                              const RuleWeights& weights, int exponent,
                              const Predictions* observed) {
  weights.validate();
  if (exponent != 1 && exponent != 2) throw ConfigError("hinge exponent must be 1 or 2");
  GroundHingeModel model;
  std::map<std::string, std::size_t> var_of;
  std::vector<double> prior_of;

  auto message_var = [&](const std::string& id) {
    if (auto it = var_of.find(id); it != var_of.end()) return it->second;
    auto pit = priors.find(id);
    if (pit == priors.end()) throw DataError("no prior for grouped message '" + id + "'");
    const double p = pit->second;
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("prior for '" + id + "' outside [0, 1]");
    HingeVariable v{VarKind::kMessage, id, p, false};
    if (observed) {
      if (auto oit = observed->find(id); oit != observed->end()) {
        v.init = std::clamp(oit->second, 0.0, 1.0);
        v.fixed = true;
      }
    }
    const std::size_t idx = model.variables.size();
    model.variables.push_back(std::move(v));
    prior_of.resize(idx + 1);
    prior_of[idx] = p;
    var_of.emplace(id, idx);

    model.hinges.push_back(GroundHinge{{{idx, 1.0}}, 0.0, weights.negative_prior, exponent,
                                       Rule::kNegativePrior, Relation::kUser, "a:" + id});
    model.hinges.push_back(GroundHinge{{{idx, -1.0}}, p, weights.positive_prior, exponent,
                                       Rule::kPositivePrior, Relation::kUser, "b:" + id});
    return idx;
  };

  for (const auto& grp : groups.groups) {
    std::vector<std::size_t> members;
    double prior_sum = 0;
    for (const auto& id : grp.member_ids) {
      members.push_back(message_var(id));
      prior_sum += prior_of[members.back()];
    }
    const std::size_t hub = model.variables.size();
    model.variables.push_back(HingeVariable{VarKind::kHub, hub_id(grp),
                                            prior_sum / static_cast<double>(members.size()),
                                            false});
    const std::string tag = std::string(relation_name(grp.relation)) + ":" + grp.key;
    for (std::size_t m : members) {
      const std::string& mid = model.variables[m].id;
      model.hinges.push_back(GroundHinge{{{m, 1.0}, {hub, -1.0}}, 0.0, weights.c(grp.relation),
                                         exponent, Rule::kMessageToHub, grp.relation,
                                         "c:" + tag + ":" + mid});
      model.hinges.push_back(GroundHinge{{{hub, 1.0}, {m, -1.0}}, 0.0, weights.d(grp.relation),
                                         exponent, Rule::kHubToMessage, grp.relation,
                                         "d:" + tag + ":" + mid});
    }
  }
  return model;
}

namespace {

std::vector<double> project(std::vector<double> x) {
  for (double& v : x) v = std::clamp(v, 0.0, 1.0);
  return x;
}

MapResult map_squared(const GroundHingeModel& model, const MapOptions& opts) {
  const std::size_t n = model.variables.size();
  // Separable quadratic majorizer: D_i = Σ_h 2ω|a_i| Σ_j |a_j| bounds the
  // curvature of every squared hinge, so each step cannot increase f.
  std::vector<double> D(n, 0.0);
  for (const auto& h : model.hinges) {
    double row = 0;
    for (const auto& t : h.terms) row += std::abs(t.coef);
    const double w = h.exponent == 1 ? 0.0 : 2.0 * h.weight * row;
    for (const auto& t : h.terms) D[t.var] += w * std::abs(t.coef);
  }

  MapResult res;
  std::vector<double> x = model.initial_state(), g, trial(n);
  double f = model.objective(x);
  for (int it = 0; it < opts.max_iter; ++it) {
    model.gradient(x, g);
    double scale = 1.0;
    double f_new = f;
    double max_step = 0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      max_step = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (model.variables[i].fixed || D[i] <= 0) {
          trial[i] = x[i];
          continue;
        }
        trial[i] = std::clamp(x[i] - g[i] / (D[i] * scale), 0.0, 1.0);
        max_step = std::max(max_step, std::abs(trial[i] - x[i]));
      }
      f_new = model.objective(trial);
      if (f_new <= f) break;
      scale *= 2.0;  // halve the step on non-improvement
    }
    res.iterations = it + 1;
    if (f_new > f) {
      res.converged = true;
      break;
    }
    const double improvement = f - f_new;
    x.swap(trial);
    f = f_new;
    if (max_step < opts.tol && improvement < opts.tol) {
      res.converged = true;
      break;
    }
  }
  res.x = std::move(x);
  res.objective = f;
  return res;
}

// Linear hinges: each max(0, l) is replaced by its Huber smoothing with width
// mu (quadratic on [0, mu], slope 1 beyond), which has curvature at most 1/mu.
// The smoothed problem is solved by accelerated projected gradient with a
// diagonal majorizer and restart on increase; mu shrinks geometrically with
// warm starts. The returned state is the best one under the true objective.
double smoothed_objective(const GroundHingeModel& model, std::span<const double> x, double mu,
                          std::vector<double>* grad) {
  if (grad) grad->assign(x.size(), 0.0);
  double f = 0;
  for (const auto& h : model.hinges) {
    const double l = h.linear(x);
    if (l <= 0) continue;
    double v, d;
    if (h.exponent == 2) {
      v = l * l;
      d = 2 * l;
    } else if (l < mu) {
      v = l * l / (2 * mu);
      d = l / mu;
    } else {
      v = l - mu / 2;
      d = 1;
    }
    f += h.weight * v;
    if (grad)
      for (const auto& t : h.terms) (*grad)[t.var] += h.weight * d * t.coef;
  }
  if (grad)
    for (std::size_t i = 0; i < x.size(); ++i)
      if (model.variables[i].fixed) (*grad)[i] = 0.0;
  return f;
}

MapResult map_smoothed(const GroundHingeModel& model, const MapOptions& opts) {
  const std::size_t n = model.variables.size();
  std::vector<double> row_of(model.hinges.size());
  for (std::size_t k = 0; k < model.hinges.size(); ++k)
    for (const auto& t : model.hinges[k].terms) row_of[k] += std::abs(t.coef);

  MapResult res;
  std::vector<double> x = model.initial_state(), prev = x, y(n), g, next(n);
  std::vector<double> best = x;
  double best_f = model.objective(x);
  int total = 0;
  bool converged = false;
  for (double mu = 0.1; mu >= 1e-7; mu *= 0.1) {
    std::vector<double> D(n, 0.0);
    for (std::size_t k = 0; k < model.hinges.size(); ++k) {
      const auto& h = model.hinges[k];
      const double curv = h.exponent == 2 ? 2.0 : 1.0 / mu;
      for (const auto& t : h.terms) D[t.var] += h.weight * curv * row_of[k] * std::abs(t.coef);
    }
    prev = x;
    double f = smoothed_objective(model, x, mu, nullptr);
    double momentum = 1;
    converged = false;
    for (int it = 0; it < opts.max_iter; ++it, ++total) {
      const double m_next = 0.5 * (1 + std::sqrt(1 + 4 * momentum * momentum));
      const double beta = (momentum - 1) / m_next;
      for (std::size_t i = 0; i < n; ++i) y[i] = std::clamp(x[i] + beta * (x[i] - prev[i]), 0.0, 1.0);
      smoothed_objective(model, y, mu, &g);
      double max_step = 0;
      for (std::size_t i = 0; i < n; ++i) {
        next[i] = model.variables[i].fixed || D[i] <= 0 ? x[i] : std::clamp(y[i] - g[i] / D[i], 0.0, 1.0);
        max_step = std::max(max_step, std::abs(next[i] - x[i]));
      }
      const double f_next = smoothed_objective(model, next, mu, nullptr);
      if (f_next > f) {
        // Restart: drop the momentum and retry from x.
        momentum = 1;
        prev = x;
        continue;
      }
      prev.swap(x);
      x = next;
      const double improvement = f - f_next;
      f = f_next;
      momentum = m_next;
      if (max_step < opts.tol && improvement < opts.tol * mu) {
        converged = true;
        break;
      }
    }
    const double true_f = model.objective(x);
    if (true_f < best_f) {
      best_f = true_f;
      best = x;
    }
  }
  res.x = std::move(best);
  res.objective = best_f;
  res.iterations = total;
  res.converged = converged;
  return res;
}

}  // namespace

MapResult map_inference(const GroundHingeModel& model, const MapOptions& opts) {
  const bool linear = std::any_of(model.hinges.begin(), model.hinges.end(),
                                  [](const GroundHinge& h) { return h.exponent == 1; });
  MapResult res = linear ? map_smoothed(model, opts) : map_squared(model, opts);
  res.x = project(std::move(res.x));
  return res;
}

double unary_map_score(double prior, const RuleWeights& w, int exponent) {
  const double a = w.negative_prior, b = w.positive_prior;
  if (exponent == 1) {
    if (b > a) return prior;
    if (b < a) return 0.0;
    return prior;
  }
  if (a + b <= 0) return prior;
  return std::clamp(b * prior / (a + b), 0.0, 1.0);
}

Predictions map_message_scores(const GroundHingeModel& model, std::span<const double> x) {
  Predictions out;
  for (std::size_t i = 0; i < model.variables.size(); ++i)
    if (model.variables[i].kind == VarKind::kMessage) out[model.variables[i].id] = x[i];
  return out;
}

namespace {

// Template key: 0 = (a), 1 = (b), then (c)/(d) per relation.
struct TemplateStats {
  std::map<std::pair<Rule, Relation>, double> phi;
  std::map<std::pair<Rule, Relation>, std::size_t> count;
};

std::pair<Rule, Relation> template_key(const GroundHinge& h) {
  if (h.rule == Rule::kNegativePrior || h.rule == Rule::kPositivePrior)
    return {h.rule, Relation::kUser};
  return {h.rule, h.relation};
}

TemplateStats template_potentials(const GroundHingeModel& model, std::span<const double> x) {
  TemplateStats s;
  for (const auto& h : model.hinges) {
    const auto k = template_key(h);
    s.phi[k] += h.potential(x);
    ++s.count[k];
  }
  return s;
}

double& weight_of(RuleWeights& w, const std::pair<Rule, Relation>& k) {
  switch (k.first) {
    case Rule::kNegativePrior: return w.negative_prior;
    case Rule::kPositivePrior: return w.positive_prior;
    case Rule::kMessageToHub:
      return w.message_to_hub.try_emplace(k.second, w.c(k.second)).first->second;
    case Rule::kHubToMessage:
      return w.hub_to_message.try_emplace(k.second, w.d(k.second)).first->second;
  }
  throw ConfigError("unknown rule");
}

}  // namespace

LearnResult learn_weights(const RuleWeights& init, std::span<const Message> messages,
                          const GroupSet& groups, const Predictions& priors,
                          const LearnOptions& opts, const Predictions* context) {
  init.validate();
  LearnResult res;
  res.weights = init;

  Predictions observed = context ? *context : Predictions{};
  std::size_t labelled = 0;
  for (const auto& m : messages) {
    if (!m.label) continue;
    if (context && context->count(m.id)) continue;
    observed[m.id] = m.is_spam() ? 1.0 : 0.0;
    ++labelled;
  }
  if (labelled == 0) {
    log::warn("no labelled validation messages; keeping initial rule weights");
    return res;
  }

  for (int step = 0; step < opts.steps; ++step) {
    const auto model = ground_rules(priors, groups, res.weights, opts.exponent, context);
    const auto x_map = map_inference(model, opts.map).x;
    const auto obs_model = ground_rules(priors, groups, res.weights, opts.exponent, &observed);
    const auto x_obs = map_inference(obs_model, opts.map).x;

    const auto s_map = template_potentials(model, x_map);
    const auto s_obs = template_potentials(model, x_obs);
    double ll = 0;
    RuleWeights next = res.weights;
    for (const auto& [k, phi_map] : s_map.phi) {
      const double phi_obs = s_obs.phi.at(k);
      double& w = weight_of(next, k);
      ll += w * (phi_map - phi_obs);
      const double grad = (phi_map - phi_obs) / static_cast<double>(s_map.count.at(k));
      w = std::max(0.0, w + opts.learning_rate * grad);
    }
    res.trace.push_back(ll);
    res.weights = next;
  }
  return res;
}

void write_ground_model(std::ostream& out, const GroundHingeModel& model) {
  out << "#eggs-hinge-model\t1\n";
  for (std::size_t i = 0; i < model.variables.size(); ++i) {
    const auto& v = model.variables[i];
    out << "var\t" << i << '\t' << (v.kind == VarKind::kHub ? "hub" : "message") << '\t' << v.id
        << '\t' << format_double(v.init) << '\t' << (v.fixed ? "fixed" : "free") << '\n';
  }
  for (const auto& h : model.hinges) {
    out << "hinge\t" << rule_name(h.rule) << '\t' << format_double(h.weight) << '\t' << h.exponent
        << '\t' << format_double(h.constant);
    for (const auto& t : h.terms) out << '\t' << t.var << ':' << format_double(t.coef);
    out << '\t' << h.provenance << '\n';
  }
}

void write_rule_weights(std::ostream& out, const RuleWeights& w, int exponent,
                        const std::string& provenance) {
  nlohmann::ordered_json j;
  j["format"] = "eggs-rule-weights";
  j["version"] = 1;
  j["exponent"] = exponent;
  j["negative_prior"] = w.negative_prior;
  j["positive_prior"] = w.positive_prior;
  nlohmann::ordered_json rel = nlohmann::ordered_json::object();
  for (const auto& [r, v] : w.message_to_hub) rel[std::string(relation_name(r))]["c"] = v;
  for (const auto& [r, v] : w.hub_to_message) rel[std::string(relation_name(r))]["d"] = v;
  j["relations"] = rel;
  j["provenance"] = provenance;
  out << j.dump(1) << '\n';
}

RuleWeights read_rule_weights(std::istream& in, int* exponent) {
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "eggs-rule-weights") throw DataError("not a rule-weight document");
  RuleWeights w;
  w.negative_prior = j.at("negative_prior").get<double>();
  w.positive_prior = j.at("positive_prior").get<double>();
  for (const auto& [name, v] : j.at("relations").items()) {
    const Relation r = parse_relation(name);
    if (v.contains("c")) w.message_to_hub[r] = v.at("c").get<double>();
    if (v.contains("d")) w.hub_to_message[r] = v.at("d").get<double>();
  }
  if (exponent) *exponent = j.value("exponent", 2);
  w.validate();
  return w;
}

}  // namespace eggs
