#pragma once

#include <array>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "eggs/groups.hpp"
#include "eggs/message.hpp"

namespace eggs {

enum class VarKind { kMessage, kHub };

/// Binary variable; state 0 = ham, 1 = spam.
struct VariableNode {
  VarKind kind = VarKind::kMessage;
  std::string id;
  std::array<double, 2> unary{0.5, 0.5};
};

/// Message-hub agreement factor: 1-ε when both ends agree, ε otherwise.
struct PairwiseFactor {
  std::size_t message_var = 0;
  std::size_t hub_var = 0;
  double epsilon = 0.1;
  Relation relation = Relation::kUser;

  double potential(int hub_state, int message_state) const {
    return hub_state == message_state ? 1.0 - epsilon : epsilon;
  }
};

using EpsilonMap = std::map<Relation, double>;
inline constexpr double kDefaultEpsilon = 0.1;
inline constexpr double kPriorClamp = 1e-6;

class FactorGraph {
 public:
  /// Throws ConfigError if a unary potential is not positive and finite.
  std::size_t add_variable(VarKind kind, std::string id, std::array<double, 2> unary);
  /// Throws ConfigError unless 0 < epsilon < 0.5 and the endpoints are a
  /// message variable and a hub variable.
  std::size_t add_factor(std::size_t message_var, std::size_t hub_var, double epsilon,
                         Relation relation);

  const std::vector<VariableNode>& variables() const { return vars_; }
  const std::vector<PairwiseFactor>& factors() const { return factors_; }
  const std::vector<std::size_t>& factors_of(std::size_t var) const { return adjacency_[var]; }
  /// Index of the variable with this id, or npos.
  std::size_t find(const std::string& id) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::vector<VariableNode> vars_;
  std::vector<PairwiseFactor> factors_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::map<std::string, std::size_t> by_id_;
};

std::string hub_id(const Group& g);

struct BuildOptions {
  double clamp = kPriorClamp;
  bool warn_on_clamp = true;
};

/// One message variable per grouped message with unary (1-p, p), one hub per
/// group with a uniform unary, and one factor per (group, member). Messages in
/// no group are left out; their posterior is their prior. Relations missing
/// from `epsilons` use kDefaultEpsilon.
FactorGraph build_factor_graph(const Predictions& priors, const GroupSet& groups,
                               const EpsilonMap& epsilons, const BuildOptions& opts = {});

struct BpOptions {
  int max_iters = 100;
  double damping = 0.5;
  double tol = 1e-6;
};

struct BpResult {
  std::vector<double> marginals;  // P(spam) per variable
  bool converged = false;
  int iterations = 0;
  double last_delta = 0;
};

/// Synchronous, damped sum-product. Non-convergence is reported via the flag.
BpResult loopy_bp(const FactorGraph& g, const BpOptions& opts = {});

inline constexpr std::size_t kExactLimit = 20;

/// Brute-force enumeration over all 2^n states. Throws ConfigError when n > 20.
std::vector<double> exact_marginals(const FactorGraph& g);

/// Posterior for every message variable, keyed by message id.
Predictions message_marginals(const FactorGraph& g, std::span<const double> marginals);

void write_factor_graph(std::ostream& out, const FactorGraph& g);

}  // namespace eggs
