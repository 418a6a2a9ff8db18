#pragma once

#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eggs/factor_graph.hpp"
#include "eggs/groups.hpp"
#include "eggs/message.hpp"

namespace eggs {

/// Rule templates, grounded per message (a, b) or per (group, member) (c, d):
///   (a) ¬spam(e)                          ℓ = spam_e
///   (b) prior(e) → spam(e)                ℓ = prior_e − spam_e
///   (c) hasRel(r,e) ∧ spam(e) → spamRel(r) ℓ = spam_e − spamRel_r
///   (d) hasRel(r,e) ∧ spamRel(r) → spam(e) ℓ = spamRel_r − spam_e
enum class Rule { kNegativePrior, kPositivePrior, kMessageToHub, kHubToMessage };

std::string_view rule_name(Rule r);

struct LinearTerm {
  std::size_t var;
  double coef;
};

/// ω · max(0, Σ coef·x + constant)^p
struct GroundHinge {
  std::vector<LinearTerm> terms;
  double constant = 0;
  double weight = 1;
  int exponent = 2;
  Rule rule = Rule::kNegativePrior;
  Relation relation = Relation::kUser;  // meaningful for (c) and (d)
  std::string provenance;

  double linear(std::span<const double> x) const;
  /// Unweighted potential max(0, ℓ)^p.
  double potential(std::span<const double> x) const;
};

struct HingeVariable {
  VarKind kind = VarKind::kMessage;
  std::string id;
  double init = 0;
  bool fixed = false;  // observed: held at `init`
};

/// Template weights. Relations without an explicit entry use 1.0.
struct RuleWeights {
  double negative_prior = 1.0;
  double positive_prior = 1.0;
  std::map<Relation, double> message_to_hub;  // rule (c)
  std::map<Relation, double> hub_to_message;  // rule (d)

  double c(Relation r) const;
  double d(Relation r) const;
  /// Throws ConfigError when any weight is negative or non-finite.
  void validate() const;
};

struct GroundHingeModel {
  std::vector<HingeVariable> variables;
  std::vector<GroundHinge> hinges;

  /// Σ ω φ(x).
  double objective(std::span<const double> x) const;
  /// ∂objective/∂x. For p = 1 a subgradient (inactive at ℓ = 0).
  void gradient(std::span<const double> x, std::vector<double>& out) const;
  std::vector<double> initial_state() const;
  std::size_t find(const std::string& id) const;
};

/// Grounds one (a) and one (b) hinge per grouped message and one (c) and one
/// (d) hinge per (group, member). Messages listed in `observed` become fixed
/// variables at the observed value. Hubs start at the mean member prior.
GroundHingeModel ground_rules(const Predictions& priors, const GroupSet& groups,
                              const RuleWeights& weights, int exponent = 2,
                              const Predictions* observed = nullptr);

struct MapOptions {
  double tol = 1e-6;
  int max_iter = 5000;
};

struct MapResult {
  std::vector<double> x;
  double objective = 0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes the hinge objective over [0,1]^n from the model's initial state.
/// Squared hinges use a diagonally majorized projected gradient step (monotone);
/// models with linear hinges are solved through a sequence of smoothed
/// problems of shrinking width. Converged when no coordinate moves by more
/// than `tol` and the objective improves by less than `tol`.
MapResult map_inference(const GroundHingeModel& model, const MapOptions& opts = {});

/// MAP score of a message that appears in no group: only (a) and (b) act on it.
double unary_map_score(double prior, const RuleWeights& weights, int exponent);

Predictions map_message_scores(const GroundHingeModel& model, std::span<const double> x);

struct LearnOptions {
  int steps = 20;
  double learning_rate = 0.5;
  int exponent = 2;
  MapOptions map;
};

struct LearnResult {
  RuleWeights weights;
  /// Approximate log-likelihood E(x_map) − E(x_observed) before each step.
  std::vector<double> trace;
};

/// Perceptron-style gradient ascent: ∂/∂ω_T ≈ Φ_T(x_map) − Φ_T(x_obs), averaged
/// over the groundings of template T, with ω projected to ≥ 0. x_obs clamps
/// labelled messages to their gold label and fills the remaining variables
/// (hubs, unlabelled messages) by conditional MAP. `context` messages are
/// fixed in both states.
LearnResult learn_weights(const RuleWeights& init, std::span<const Message> messages,
                          const GroupSet& groups, const Predictions& priors,
                          const LearnOptions& opts = {}, const Predictions* context = nullptr);

void write_ground_model(std::ostream& out, const GroundHingeModel& model);
void write_rule_weights(std::ostream& out, const RuleWeights& w, int exponent,
                        const std::string& provenance);
RuleWeights read_rule_weights(std::istream& in, int* exponent = nullptr);

}  // namespace eggs
