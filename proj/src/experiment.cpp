#include "eggs/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <regex>
#include <set>
#include <thread>

#include "eggs/error.hpp"
#include "eggs/log.hpp"
#include "eggs/metrics.hpp"

namespace eggs {

std::string ModelSpec::name() const {
  std::string base = stacks < 0 ? "" : "SGL(" + std::to_string(stacks) + ")";
  switch (joint) {
    case JointKind::kNone:
      return base.empty() ? "Independent" : base;
    case JointKind::kMrf:
      return base.empty() ? "MRF" : base + "+MRF";
    case JointKind::kPsl:
      return base.empty() ? "PSL" : base + "+PSL";
  }
  return base;
}

std::string ModelSpec::base_name() const {
  return stacks < 0 ? "Independent" : "SGL(" + std::to_string(stacks) + ")";
}

namespace {

std::optional<int> parse_base(const std::string& s) {
  static const std::regex sgl(R"(SGL\((\d{1,3})\))");
  if (s == "Independent") return -1;
  std::smatch m;
  if (std::regex_match(s, m, sgl)) return std::stoi(m[1].str());
  return std::nullopt;
}

std::optional<JointKind> parse_joint(const std::string& s) {
  if (s == "MRF") return JointKind::kMrf;
  if (s == "PSL") return JointKind::kPsl;
  return std::nullopt;
}

}  // namespace

ModelSpec parse_model_spec(std::string_view name) {
  const std::string s(name);
  const auto unknown = [&] { return ConfigError("unknown model '" + s + "'"); };
  ModelSpec spec;
  if (const auto plus = s.find('+'); plus != std::string::npos) {
    const auto base = parse_base(s.substr(0, plus));
    const auto joint = parse_joint(s.substr(plus + 1));
    if (!base || !joint) throw unknown();
    spec.stacks = *base;
    spec.joint = *joint;
  } else if (const auto base = parse_base(s)) {
    spec.stacks = *base;
  } else if (const auto joint = parse_joint(s)) {
    spec.joint = *joint;
  } else {
    throw unknown();
  }
  return spec;
}

void ExperimentConfig::validate() const {
  if (roster.empty()) throw ConfigError("model roster is empty");
  if (relations.empty()) throw ConfigError("relation list is empty");
  if (n_subsets == 0) throw ConfigError("n_subsets must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  for (double l2 : l2_grid)
    if (!(l2 >= 0 && std::isfinite(l2))) throw ConfigError("l2 grid values must be >= 0");
  if (!(logistic.l2 >= 0)) throw ConfigError("l2 must be >= 0");
  for (const auto& [r, e] : epsilons)
    if (!(e > 0 && e < 0.5)) throw ConfigError("epsilon values must lie in (0, 0.5)");
  for (double e : epsilon_grid)
    if (!(e > 0 && e < 0.5)) throw ConfigError("epsilon grid values must lie in (0, 0.5)");
  if (psl_exponent != 1 && psl_exponent != 2) throw ConfigError("PSL exponent must be 1 or 2");
  psl_weights.validate();
  std::set<std::string> names;
  for (const auto& m : roster)
    if (!names.insert(m.name()).second) throw ConfigError("duplicate roster model " + m.name());
}

// ---- per-subset stages --------------------------------------------------------------

namespace {

std::vector<std::size_t> range_indices(const IndexRange& r) {
  std::vector<std::size_t> v(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) v[i] = r.begin + i;
  return v;
}

std::vector<double> gold(std::span<const Message> messages, const IndexRange& r) {
  std::vector<double> y;
  y.reserve(r.size());
  for (std::size_t i = r.begin; i < r.end; ++i) y.push_back(messages[i].is_spam() ? 1.0 : 0.0);
  return y;
}

/// AUPR over the labelled messages of `r`, or nullopt when single-class.
std::optional<double> range_aupr(std::span<const Message> messages, const IndexRange& r,
                                 const std::vector<double>& scores) {
  std::vector<double> s;
  std::vector<int> y;
  for (std::size_t i = r.begin; i < r.end; ++i) {
    if (!messages[i].label) continue;
    s.push_back(scores[i]);
    y.push_back(messages[i].is_spam() ? 1 : 0);
  }
  const auto pos = std::count(y.begin(), y.end(), 1);
  if (pos == 0 || pos == static_cast<long>(y.size())) return std::nullopt;
  return aupr(s, y);
}

/// Groups over `messages` with at least one member inside `focus`.
GroupSet groups_touching(std::span<const Message> messages, const IndexRange& focus,
                         const std::vector<Relation>& relations, bool prune) {
  GroupSet all = build_groups(messages, relations);
  if (!prune) return all;
  std::set<std::string> ids;
  for (std::size_t i = focus.begin; i < focus.end; ++i) ids.insert(messages[i].id);
  GroupSet kept;
  kept.relations = all.relations;
  for (auto& g : all.groups)
    if (std::any_of(g.member_ids.begin(), g.member_ids.end(),
                    [&](const std::string& id) { return ids.count(id) > 0; }))
      kept.groups.push_back(std::move(g));
  return kept;
}

std::vector<std::optional<double>> context_labels(std::span<const Message> messages,
                                                  std::size_t context_end) {
  std::vector<std::optional<double>> known(messages.size());
  for (std::size_t i = 0; i < context_end; ++i)
    if (messages[i].label) known[i] = messages[i].is_spam() ? 1.0 : 0.0;
  return known;
}

/// Base-model scores for every message in `messages` (rows of X).
std::optional<std::vector<double>> base_scores(const std::string& base,
                                               std::span<const Message> messages,
                                               const FeatureMatrix& X, const GroupSet& groups,
                                               const SubsetModels& models,
                                               const std::vector<std::optional<double>>* known,
                                               bool stacking_context) {
  if (base == "Independent") return predict_proba(models.independent, X);
  const ModelSpec spec = parse_model_spec(base);
  auto it = models.stacked.find(spec.stacks);
  if (it == models.stacked.end()) return std::nullopt;
  return infer_stacked(it->second, messages, X, groups, stacking_context ? known : nullptr);
}

/// Priors keyed by id; context messages take their gold label.
Predictions make_priors(std::span<const Message> messages, const std::vector<double>& scores,
                        const std::vector<std::optional<double>>& known) {
  Predictions p;
  p.reserve(messages.size());
  for (std::size_t i = 0; i < messages.size(); ++i)
    p.emplace(messages[i].id, known[i] ? *known[i] : scores[i]);
  return p;
}

Predictions observed_of(std::span<const Message> messages,
                        const std::vector<std::optional<double>>& known) {
  Predictions p;
  for (std::size_t i = 0; i < messages.size(); ++i)
    if (known[i]) p.emplace(messages[i].id, *known[i]);
  return p;
}

std::vector<double> run_mrf(std::span<const Message> messages, const Predictions& priors,
                            const GroupSet& groups, const EpsilonMap& eps, const BpOptions& bp,
                            Diagnostics& diag) {
  BuildOptions bo;
  bo.warn_on_clamp = false;
  const FactorGraph g = build_factor_graph(priors, groups, eps, bo);
  const BpResult r = loopy_bp(g, bp);
  ++diag.bp_runs;
  if (!r.converged) ++diag.bp_not_converged;
  const Predictions post = message_marginals(g, r.marginals);
  std::vector<double> out(messages.size());
  for (std::size_t i = 0; i < messages.size(); ++i) {
    auto it = post.find(messages[i].id);
    out[i] = it == post.end() ? priors.at(messages[i].id) : it->second;
  }
  return out;
}

std::vector<double> run_psl(std::span<const Message> messages, const Predictions& priors,
                            const Predictions& observed, const GroupSet& groups,
                            const RuleWeights& w, int exponent, const MapOptions& map,
                            Diagnostics& diag) {
  const GroundHingeModel model = ground_rules(priors, groups, w, exponent, &observed);
  const MapResult r = map_inference(model, map);
  ++diag.map_runs;
  if (!r.converged) ++diag.map_not_converged;
  const Predictions scores = map_message_scores(model, r.x);
  std::vector<double> out(messages.size());
  for (std::size_t i = 0; i < messages.size(); ++i) {
    const std::string& id = messages[i].id;
    if (auto it = observed.find(id); it != observed.end()) {
      out[i] = it->second;
    } else if (auto sit = scores.find(id); sit != scores.end()) {
      out[i] = sit->second;
    } else {
      out[i] = unary_map_score(priors.at(id), w, exponent);
    }
  }
  return out;
}

}  // namespace

SubsetFeatures featurize_subset(std::span<const Message> subset_messages, const SplitSubset& ranges,
                                const GraphFeatureTable& graph, const FeatureConfig& config) {
  SubsetFeatures out;
  std::vector<bool> visible(subset_messages.size(), false);
  for (std::size_t i = ranges.train.begin; i < ranges.validation.end; ++i) visible[i] = true;
  const bool ngrams = config.use_ngrams && std::find(config.drop_families.begin(),
                                                     config.drop_families.end(),
                                                     "ngram") == config.drop_families.end();
  if (ngrams) {
    std::vector<std::string> texts;
    for (std::size_t i = ranges.train.begin; i < ranges.train.end; ++i)
      texts.push_back(subset_messages[i].text);
    out.vocab = fit_ngram_vocabulary(texts, config.ngram_n, config.ngram_top_k);
  }
  out.X = assemble_features(subset_messages, visible, graph, ngrams ? &out.vocab : nullptr, config);
  return out;
}

SubsetModels train_subset(std::span<const Message> subset_messages, const IndexRange& train,
                          const IndexRange& validation, const FeatureMatrix& X,
                          const ExperimentConfig& config, Diagnostics& diag) {
  if (train.empty()) throw DataError("subset has no training messages");
  SubsetModels models;
  const auto train_idx = range_indices(train);
  const FeatureMatrix X_train = X.select_rows(train_idx);
  const auto y_train = gold(subset_messages, train);

  // Prefix used for validation-time tuning: train + validation, no future rows.
  const IndexRange prefix{0, validation.end};
  const auto prefix_msgs = subset_messages.subspan(0, prefix.end);
  const FeatureMatrix X_prefix = X.select_rows(range_indices(prefix));

  auto fit = [&](double l2) {
    LogisticOptions opts = config.logistic;
    opts.l2 = l2;
    LinearModel m = train_logistic(X_train, y_train, opts);
    ++diag.classifier_runs;
    if (!m.converged) ++diag.classifier_not_converged;
    return m;
  };

  double best_l2 = config.logistic.l2;
  if (config.l2_grid.empty()) {
    models.independent = fit(best_l2);
  } else {
    std::optional<double> best;
    for (double l2 : config.l2_grid) {
      LinearModel m = fit(l2);
      const auto auc = range_aupr(prefix_msgs, validation, predict_proba(m, X_prefix));
      if (!best || (auc && *auc > *best) || (!auc && models.independent.weights.empty())) {
        if (auc) best = auc;
        models.independent = std::move(m);
        best_l2 = l2;
      }
    }
    if (!best) {
      // Single-class validation: fall back to the configured default.
      best_l2 = config.logistic.l2;
      models.independent = fit(best_l2);
    }
  }

  std::set<int> stacks;
  std::set<std::string> joint_bases;
  bool need_mrf = false, need_psl = false;
  for (const auto& m : config.roster) {
    if (m.stacks >= 0) stacks.insert(m.stacks);
    if (m.joint != JointKind::kNone) joint_bases.insert(m.base_name());
    need_mrf |= m.joint == JointKind::kMrf;
    need_psl |= m.joint == JointKind::kPsl;
  }

  LogisticOptions stack_opts = config.logistic;
  stack_opts.l2 = best_l2;
  for (int k : stacks) {
    try {
      StackedModel sm = train_stacked(subset_messages.subspan(train.begin, train.size()), X_train,
                                      y_train, k, config.relations, stack_opts,
                                      config.pseudo_mode);
      for (const auto& st : sm.stages) {
        ++diag.classifier_runs;
        if (!st.converged) ++diag.classifier_not_converged;
      }
      models.stacked.emplace(k, std::move(sm));
    } catch (const DataError& e) {
      log::warn("SGL(" + std::to_string(k) + ") unavailable: " + e.what());
    }
  }

  if (joint_bases.empty()) return models;

  const auto known = config.use_context_labels ? context_labels(prefix_msgs, train.end)
                                               : std::vector<std::optional<double>>(prefix.end);
  const GroupSet all_groups = build_groups(prefix_msgs, config.relations);
  const GroupSet joint_groups =
      groups_touching(prefix_msgs, validation, config.relations, config.use_context_labels);
  const Predictions observed = observed_of(prefix_msgs, known);

  for (const auto& base : joint_bases) {
    const auto scores = base_scores(base, prefix_msgs, X_prefix, all_groups, models, &known,
                                    config.stacking_context_labels);
    if (!scores) continue;
    const Predictions priors = make_priors(prefix_msgs, *scores, known);

    if (need_mrf) {
      EpsilonMap eps = config.epsilons;
      for (Relation r : config.relations)
        if (!eps.count(r)) eps[r] = kDefaultEpsilon;
      if (!config.epsilon_grid.empty() && !validation.empty()) {
        for (Relation r : config.relations) {
          std::optional<double> best;
          double best_e = eps[r];
          for (double e : config.epsilon_grid) {
            EpsilonMap trial = eps;
            trial[r] = e;
            const auto post = run_mrf(prefix_msgs, priors, joint_groups, trial, config.bp, diag);
            const auto auc = range_aupr(prefix_msgs, validation, post);
            if (auc && (!best || *auc > *best)) {
              best = auc;
              best_e = e;
            }
          }
          eps[r] = best_e;
        }
      }
      models.epsilons.emplace(base, std::move(eps));
    }

    if (need_psl) {
      RuleWeights w = config.psl_weights;
      if (config.psl_learn && !validation.empty()) {
        LearnOptions lo = config.psl_learning;
        lo.exponent = config.psl_exponent;
        lo.map = config.map;
        const auto val_msgs = prefix_msgs.subspan(validation.begin, validation.size());
        const LearnResult lr = learn_weights(w, val_msgs, joint_groups, priors, lo,
                                             config.use_context_labels ? &observed : nullptr);
        diag.map_runs += 2 * static_cast<std::size_t>(lo.steps);
        w = lr.weights;
      }
      models.psl.emplace(base, std::move(w));
    }
  }
  return models;
}

std::map<std::string, Predictions> infer_subset(std::span<const Message> subset_messages,
                                                const SplitSubset& ranges, const FeatureMatrix& X,
                                                const SubsetModels& models,
                                                const ExperimentConfig& config, Diagnostics& diag) {
  const auto known = config.use_context_labels
                         ? context_labels(subset_messages, ranges.test.begin)
                         : std::vector<std::optional<double>>(subset_messages.size());
  const GroupSet all_groups = build_groups(subset_messages, config.relations);
  const GroupSet joint_groups = groups_touching(subset_messages, ranges.test, config.relations,
                                                config.use_context_labels);
  const Predictions observed = observed_of(subset_messages, known);

  std::map<std::string, std::vector<double>> scores;
  auto base = [&](const std::string& name) -> const std::vector<double>* {
    if (auto it = scores.find(name); it != scores.end()) return &it->second;
    auto s = base_scores(name, subset_messages, X, all_groups, models, &known,
                         config.stacking_context_labels);
    if (!s) return nullptr;
    return &scores.emplace(name, std::move(*s)).first->second;
  };

  std::map<std::string, Predictions> out;
  for (const auto& spec : config.roster) {
    const auto* b = base(spec.base_name());
    if (!b) continue;
    std::vector<double> s;
    if (spec.joint == JointKind::kNone) {
      s = *b;
    } else {
      const Predictions priors = make_priors(subset_messages, *b, known);
      if (spec.joint == JointKind::kMrf) {
        auto eit = models.epsilons.find(spec.base_name());
        if (eit == models.epsilons.end()) continue;
        s = run_mrf(subset_messages, priors, joint_groups, eit->second, config.bp, diag);
      } else {
        auto wit = models.psl.find(spec.base_name());
        if (wit == models.psl.end()) continue;
        s = run_psl(subset_messages, priors, observed, joint_groups, wit->second,
                    config.psl_exponent, config.map, diag);
      }
    }
    Predictions p;
    for (std::size_t i = ranges.test.begin; i < ranges.test.end; ++i)
      p.emplace(subset_messages[i].id, s[i]);
    out.emplace(spec.name(), std::move(p));
  }
  return out;
}

// ---- evaluation ----------------------------------------------------------------------

EvaluationReport evaluate_predictions(
    std::span<const Message> messages, const SplitPlan& plan,
    const std::vector<std::string>& model_names,
    const std::vector<std::map<std::string, Predictions>>& predictions,
    const std::vector<Relation>& relations) {
  if (predictions.size() != plan.n_subsets())
    throw DataError("predictions cover " + std::to_string(predictions.size()) + " subsets, plan has " +
                    std::to_string(plan.n_subsets()));
  EvaluationReport report;

  std::vector<std::set<std::string>> inductive(plan.n_subsets());
  for (std::size_t s = 0; s < plan.n_subsets(); ++s) {
    const auto& sub = plan.subsets[s];
    const auto span = messages.subspan(sub.train.begin, sub.test.end - sub.train.begin);
    const GroupSet groups = build_groups(span, relations);
    const auto part = inductive_partition(messages.subspan(sub.test.begin, sub.test.size()),
                                          messages.subspan(sub.train.begin, sub.train.size()),
                                          groups);
    inductive[s].insert(part.inductive.begin(), part.inductive.end());
  }

  for (const auto& name : model_names) {
    bool complete = true;
    for (const auto& per : predictions)
      if (!per.count(name)) complete = false;
    if (!complete) {
      report.notices.push_back("model " + name + " skipped: predictions missing for some subsets");
      continue;
    }
    ModelReport mr;
    mr.name = name;
    std::vector<double> s_all, s_ind, s_tr;
    std::vector<int> y_all, y_ind, y_tr;
    for (std::size_t s = 0; s < plan.n_subsets(); ++s) {
      const auto& pred = predictions[s].at(name);
      std::vector<double> s_sub;
      std::vector<int> y_sub;
      for (std::size_t i = plan.subsets[s].test.begin; i < plan.subsets[s].test.end; ++i) {
        const Message& m = messages[i];
        if (!m.label) continue;
        auto it = pred.find(m.id);
        if (it == pred.end())
          throw DataError("no " + name + " prediction for test message '" + m.id + "'");
        const int y = m.is_spam() ? 1 : 0;
        s_sub.push_back(it->second);
        y_sub.push_back(y);
        s_all.push_back(it->second);
        y_all.push_back(y);
        if (inductive[s].count(m.id)) {
          s_ind.push_back(it->second);
          y_ind.push_back(y);
        } else {
          s_tr.push_back(it->second);
          y_tr.push_back(y);
        }
      }
      mr.per_subset.push_back(summarize(s_sub, y_sub));
    }
    mr.all = summarize(s_all, y_all);
    mr.inductive = summarize(s_ind, y_ind);
    mr.transductive = summarize(s_tr, y_tr);
    report.models.push_back(std::move(mr));
  }

  report.coverage = component_coverage(messages, build_groups(messages, relations));
  return report;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

EvaluationReport run_experiment(std::span<const Message> messages,
                                std::span<const std::pair<std::string, std::string>> follows,
                                const ExperimentConfig& config) {
  config.validate();
  std::vector<Message> sorted(messages.begin(), messages.end());
  sort_chronologically(sorted);
  const SplitPlan plan = chronological_split(sorted, config.n_subsets, config.fractions);
  const GraphFeatureTable graph = compute_graph_features(build_follower_graph(follows));

  std::vector<std::map<std::string, Predictions>> preds(plan.n_subsets());
  std::vector<Diagnostics> diags(plan.n_subsets());
  parallel_for(plan.n_subsets(), config.threads, [&](std::size_t s) {
    const auto& sub = plan.subsets[s];
    const auto span = std::span<const Message>(sorted).subspan(sub.train.begin,
                                                               sub.test.end - sub.train.begin);
    const std::size_t off = sub.train.begin;
    const SplitSubset local{{sub.train.begin - off, sub.train.end - off},
                            {sub.validation.begin - off, sub.validation.end - off},
                            {sub.test.begin - off, sub.test.end - off}};
    ExperimentConfig cfg = config;
    cfg.logistic.seed = config.seed + s;
    const SubsetFeatures f = featurize_subset(span, local, graph, cfg.features);
    const SubsetModels models = train_subset(span, local.train, local.validation, f.X, cfg, diags[s]);
    preds[s] = infer_subset(span, local, f.X, models, cfg, diags[s]);
  });

  std::vector<std::string> names;
  for (const auto& m : config.roster) names.push_back(m.name());
  EvaluationReport report = evaluate_predictions(sorted, plan, names, preds, config.relations);
  for (const auto& d : diags) report.diagnostics += d;
  return report;
}

}  // namespace eggs
