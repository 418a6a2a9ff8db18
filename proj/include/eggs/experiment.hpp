#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eggs/evaluation.hpp"
#include "eggs/factor_graph.hpp"
#include "eggs/features.hpp"
#include "eggs/follower_graph.hpp"
#include "eggs/hinge_mrf.hpp"
#include "eggs/logistic.hpp"
#include "eggs/split.hpp"
#include "eggs/stacking.hpp"

namespace eggs {

enum class JointKind { kNone, kMrf, kPsl };

/// One roster entry: an optional stacked base model and an optional joint
/// inference layer on top of it. "Independent", "SGL(2)", "MRF" (= Independent
/// priors), "PSL", "SGL(1)+MRF", "SGL(1)+PSL".
struct ModelSpec {
  int stacks = -1;  // -1: independent model
  JointKind joint = JointKind::kNone;

  std::string name() const;
  /// Name of the model whose outputs act as priors / base predictions.
  std::string base_name() const;
  bool operator==(const ModelSpec&) const = default;
};

/// Throws ConfigError on an unrecognized name.
ModelSpec parse_model_spec(std::string_view name);

struct ExperimentConfig {
  std::vector<Relation> relations{Relation::kUser, Relation::kText, Relation::kLink};
  std::vector<ModelSpec> roster;

  FeatureConfig features;
  LogisticOptions logistic;
  /// Candidate L2 strengths, picked per subset by validation AUPR. Empty: use logistic.l2.
  std::vector<double> l2_grid{0.001, 0.01, 0.1, 1.0};
  PseudoMode pseudo_mode = PseudoMode::kSoft;

  EpsilonMap epsilons;
  /// Per-relation coordinate search over this grid on validation AUPR. Empty: no tuning.
  std::vector<double> epsilon_grid{0.05, 0.1, 0.2, 0.3, 0.4};
  BpOptions bp;

  RuleWeights psl_weights;
  int psl_exponent = 2;
  bool psl_learn = true;
  LearnOptions psl_learning;
  MapOptions map;

  std::size_t n_subsets = 10;
  SplitFractions fractions;
  /// Expose gold labels of past (train, then validation) messages to joint inference.
  bool use_context_labels = true;
  /// Also feed those labels into stacked pseudo-relational features. Off by
  /// default: stacked models are trained on predicted neighbour labels only.
  bool stacking_context_labels = false;

  std::uint64_t seed = 1;
  int threads = 1;

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
};

/// Feature matrix for the messages of one subset (train, validation and test
/// rows in chronological order) plus the n-gram vocabulary fit on train texts.
struct SubsetFeatures {
  FeatureMatrix X;
  NgramVocabulary vocab;
};

SubsetFeatures featurize_subset(std::span<const Message> subset_messages, const SplitSubset& ranges,
                                const GraphFeatureTable& graph, const FeatureConfig& config);

/// Learned parameters for one subset. Keys of `epsilons` and `psl` are base model names.
struct SubsetModels {
  LinearModel independent;
  std::map<int, StackedModel> stacked;
  std::map<std::string, EpsilonMap> epsilons;
  std::map<std::string, RuleWeights> psl;
};

/// `subset_messages` and the rows of `X` cover train, validation and test of
/// one subset; ranges are relative to the subset start.
SubsetModels train_subset(std::span<const Message> subset_messages, const IndexRange& train,
                          const IndexRange& validation, const FeatureMatrix& X,
                          const ExperimentConfig& config, Diagnostics& diag);

/// Test-range scores per roster model name.
std::map<std::string, Predictions> infer_subset(std::span<const Message> subset_messages,
                                                const SplitSubset& ranges, const FeatureMatrix& X,
                                                const SubsetModels& models,
                                                const ExperimentConfig& config, Diagnostics& diag);

/// Concatenates test predictions across subsets and computes the report.
/// `predictions[s]` maps model name to scores for subset s. `messages` is
/// chronologically sorted and indexed by the plan.
EvaluationReport evaluate_predictions(std::span<const Message> messages, const SplitPlan& plan,
                                      const std::vector<std::string>& model_names,
                                      const std::vector<std::map<std::string, Predictions>>& predictions,
                                      const std::vector<Relation>& relations);

/// Runs fn(0..n-1) over `threads` workers. Each index runs exactly once, so
/// results written to per-index slots do not depend on scheduling.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

/// Whole protocol in memory: split, featurize, train, infer and evaluate.
EvaluationReport run_experiment(std::span<const Message> messages,
                                std::span<const std::pair<std::string, std::string>> follows,
                                const ExperimentConfig& config);

}  // namespace eggs
