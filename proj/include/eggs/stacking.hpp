#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eggs/feature_matrix.hpp"
#include "eggs/groups.hpp"
#include "eggs/logistic.hpp"
#include "eggs/message.hpp"

namespace eggs {

/// Soft: mean predicted probability of related messages. Hard: fraction of
/// related messages whose prediction is >= 0.5.
enum class PseudoMode { kSoft, kHard };

inline constexpr double kNeutralRatio = 0.5;

/// One ratio column per configured relation; values[m][r] in [0, 1].
struct PseudoRelationalFeatures {
  std::vector<Relation> relations;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> values;

  double at(const std::string& id, Relation r) const;
};

/// For message m and relation r: mean score over the other members of every
/// r-group containing m (pooled, each neighbour once, m itself excluded).
/// Messages with no r-group get kNeutralRatio.
std::vector<std::vector<double>> pseudo_feature_values(const GroupSet& groups,
                                                       const GroupIndex& index,
                                                       std::span<const double> scores,
                                                       const std::vector<Relation>& relations,
                                                       PseudoMode mode = PseudoMode::kSoft);

PseudoRelationalFeatures compute_pseudo_features(std::span<const Message> messages,
                                                 const GroupSet& groups,
                                                 const Predictions& scores,
                                                 PseudoMode mode = PseudoMode::kSoft);

/// Chain f^0..f^K. f^0 sees only the base columns; f^k also sees one ratio
/// column per relation, computed from f^{k-1}'s rolled-forward predictions.
struct StackedModel {
  std::vector<LinearModel> stages;
  std::vector<Relation> relations;
  PseudoMode mode = PseudoMode::kSoft;

  int stacks() const { return static_cast<int>(stages.size()) - 1; }
};

std::vector<Column> pseudo_columns(const std::vector<Relation>& relations);

/// `messages` must be chronological and aligned with the rows of `X` and `y`.
/// Training data is cut into K+1 contiguous slices; slice k trains f^k.
/// Throws DataError when K+1 exceeds the number of messages.
StackedModel train_stacked(std::span<const Message> messages, const FeatureMatrix& X,
                           std::span<const double> y, int K, const std::vector<Relation>& relations,
                           const LogisticOptions& opts = {}, PseudoMode mode = PseudoMode::kSoft);

/// Runs f^0 then alternates S and f^k over all rows of `X`. `known`, when
/// given, replaces the score of a message wherever it feeds a ratio feature
/// (used to expose training labels at test time). Returns ŷ'_K per row.
/// Throws ConfigError if `groups` lacks a relation the model was trained with.
std::vector<double> infer_stacked(const StackedModel& model, std::span<const Message> messages,
                                  const FeatureMatrix& X, const GroupSet& groups,
                                  const std::vector<std::optional<double>>* known = nullptr);

void write_stacked_model(std::ostream& out, const StackedModel& m);
StackedModel read_stacked_model(std::istream& in);

}  // namespace eggs
