#include "eggs/stacking.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "eggs/error.hpp"
#include "model_json.hpp"

namespace eggs {

double PseudoRelationalFeatures::at(const std::string& id, Relation r) const {
  const auto rit = std::find(relations.begin(), relations.end(), r);
  const auto iit = std::find(ids.begin(), ids.end(), id);
  if (rit == relations.end() || iit == ids.end())
    throw DataError("no pseudo-relational feature for '" + id + "'");
  return values[static_cast<std::size_t>(iit - ids.begin())]
               [static_cast<std::size_t>(rit - relations.begin())];
}

std::vector<std::vector<double>> pseudo_feature_values(const GroupSet& groups,
                                                       const GroupIndex& index,
                                                       std::span<const double> scores,
                                                       const std::vector<Relation>& relations,
                                                       PseudoMode mode) {
  const std::size_t n = index.groups_of_message.size();
  if (scores.size() != n) throw DataError("score vector does not cover every message");
  std::vector<std::vector<double>> out(n, std::vector<double>(relations.size(), kNeutralRatio));
  // stamp[j] == i+1 marks neighbour j as already counted for message i.
  std::vector<std::size_t> stamp(n, 0);
  auto value = [&](std::size_t j) {
    return mode == PseudoMode::kHard ? (scores[j] >= 0.5 ? 1.0 : 0.0) : scores[j];
  };
  for (std::size_t r = 0; r < relations.size(); ++r) {
    std::fill(stamp.begin(), stamp.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0;
      std::size_t count = 0;
      for (std::size_t g : index.groups_of_message[i]) {
        if (groups.groups[g].relation != relations[r]) continue;
        for (std::size_t j : index.members[g]) {
          if (j == i || stamp[j] == i + 1) continue;
          stamp[j] = i + 1;
          sum += value(j);
          ++count;
        }
      }
      if (count > 0) out[i][r] = std::clamp(sum / static_cast<double>(count), 0.0, 1.0);
    }
  }
  return out;
}

PseudoRelationalFeatures compute_pseudo_features(std::span<const Message> messages,
                                                 const GroupSet& groups,
                                                 const Predictions& scores, PseudoMode mode) {
  const GroupIndex index = index_groups(groups, messages);
  std::vector<double> s(messages.size(), kNeutralRatio);
  for (std::size_t i = 0; i < messages.size(); ++i) {
    auto it = scores.find(messages[i].id);
    if (it != scores.end()) {
      s[i] = it->second;
    } else if (!index.groups_of_message[i].empty()) {
      throw DataError("no prediction for grouped message '" + messages[i].id + "'");
    }
  }
  PseudoRelationalFeatures out;
  out.relations = groups.relations;
  for (const auto& m : messages) out.ids.push_back(m.id);
  out.values = pseudo_feature_values(groups, index, s, groups.relations, mode);
  return out;
}

std::vector<Column> pseudo_columns(const std::vector<Relation>& relations) {
  std::vector<Column> cols;
  for (Relation r : relations)
    cols.push_back(Column{std::string(pseudo_feature_name(r)), ColumnKind::kDense, "relational"});
  return cols;
}

namespace {

FeatureMatrix augment(const FeatureMatrix& X, const GroupSet& groups, const GroupIndex& index,
                      std::span<const double> scores, const std::vector<Relation>& relations,
                      PseudoMode mode) {
  return X.with_dense_columns(pseudo_columns(relations),
                              pseudo_feature_values(groups, index, scores, relations, mode));
}

}  // namespace

StackedModel train_stacked(std::span<const Message> messages, const FeatureMatrix& X,
                           std::span<const double> y, int K, const std::vector<Relation>& relations,
                           const LogisticOptions& opts, PseudoMode mode) {
  if (K < 0) throw ConfigError("stack count must be >= 0");
  const std::size_t n = messages.size();
  if (X.rows() != n || y.size() != n) throw DataError("messages, features and labels misaligned");
  const auto slices = static_cast<std::size_t>(K) + 1;
  if (slices > n)
    throw DataError("cannot split " + std::to_string(n) + " training messages into " +
                    std::to_string(slices) + " stacking slices");
  if (!is_chronological(messages)) throw DataError("stacking requires chronological messages");

  StackedModel model;
  model.relations = relations;
  model.mode = mode;
  for (std::size_t k = 0; k < slices; ++k) {
    const std::size_t begin = k * n / slices;
    const std::size_t end = (k + 1) * n / slices;
    std::vector<std::size_t> rows(end - begin);
    for (std::size_t i = begin; i < end; ++i) rows[i - begin] = i;
    const FeatureMatrix Xk = X.select_rows(rows);
    const auto yk = y.subspan(begin, end - begin);
    if (k == 0) {
      model.stages.push_back(train_logistic(Xk, yk, opts));
      continue;
    }
    const auto slice_msgs = messages.subspan(begin, end - begin);
    const GroupSet gk = build_groups(slice_msgs, relations);
    const GroupIndex ik = index_groups(gk, slice_msgs);
    // Roll predictions for this slice forward through f^0..f^{k-1}.
    std::vector<double> scores = predict_proba(model.stages[0], Xk);
    for (std::size_t j = 1; j < k; ++j)
      scores = predict_proba(model.stages[j], augment(Xk, gk, ik, scores, relations, mode));
    model.stages.push_back(
        train_logistic(augment(Xk, gk, ik, scores, relations, mode), yk, opts));
  }
  return model;
}

std::vector<double> infer_stacked(const StackedModel& model, std::span<const Message> messages,
                                  const FeatureMatrix& X, const GroupSet& groups,
                                  const std::vector<std::optional<double>>* known) {
  if (model.stages.empty()) throw DataError("stacked model has no stages");
  if (X.rows() != messages.size()) throw DataError("messages and features misaligned");
  if (model.stacks() > 0)
    for (Relation r : model.relations)
      if (!groups.has_relation(r))
        throw ConfigError("relation '" + std::string(relation_name(r)) +
                          "' was used in training but is missing at inference");
  if (known && known->size() != messages.size()) throw DataError("known-score vector misaligned");

  std::vector<double> scores = predict_proba(model.stages[0], X);
  if (model.stacks() == 0) return scores;
  const GroupIndex index = index_groups(groups, messages);
  for (std::size_t k = 1; k < model.stages.size(); ++k) {
    std::vector<double> fed = scores;
    if (known)
      for (std::size_t i = 0; i < fed.size(); ++i)
        if ((*known)[i]) fed[i] = *(*known)[i];
    scores = predict_proba(model.stages[k],
                           augment(X, groups, index, fed, model.relations, model.mode));
  }
  return scores;
}

void write_stacked_model(std::ostream& out, const StackedModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "eggs-stacked-model";
  j["version"] = 1;
  auto& rel = j["relations"] = nlohmann::ordered_json::array();
  for (Relation r : m.relations) rel.push_back(relation_name(r));
  j["pseudo_mode"] = m.mode == PseudoMode::kHard ? "hard" : "soft";
  auto& st = j["stages"] = nlohmann::ordered_json::array();
  for (const auto& s : m.stages) st.push_back(detail::linear_model_to_json(s));
  out << j.dump(1) << '\n';
}

StackedModel read_stacked_model(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "eggs-stacked-model") throw DataError("not a stacked model document");
  StackedModel m;
  for (const auto& r : j.at("relations")) m.relations.push_back(parse_relation(r.get<std::string>()));
  m.mode = j.at("pseudo_mode").get<std::string>() == "hard" ? PseudoMode::kHard : PseudoMode::kSoft;
  for (const auto& s : j.at("stages")) m.stages.push_back(detail::linear_model_from_json(s));
  return m;
}

}  // namespace eggs
