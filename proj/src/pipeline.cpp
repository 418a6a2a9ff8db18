#include "eggs/pipeline.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "eggs/error.hpp"
#include "eggs/format.hpp"
#include "eggs/log.hpp"

namespace eggs {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// ---- config -----------------------------------------------------------------------

namespace {

void check_keys(const nlohmann::json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : obj.items())
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("unknown config key '" + where + "." + key + "'");
}

template <typename T>
void read_field(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + where + "." + key + "' has the wrong type");
  }
}

std::string pseudo_mode_name(PseudoMode m) { return m == PseudoMode::kSoft ? "soft" : "hard"; }

PseudoMode parse_pseudo_mode(const std::string& s) {
  if (s == "soft") return PseudoMode::kSoft;
  if (s == "hard") return PseudoMode::kHard;
  throw ConfigError("pseudo_mode must be 'soft' or 'hard', got '" + s + "'");
}

FeatureMode parse_feature_mode(const std::string& s) {
  if (s == "full") return FeatureMode::kFull;
  if (s == "limited") return FeatureMode::kLimited;
  throw ConfigError("feature mode must be 'full' or 'limited', got '" + s + "'");
}

std::string feature_mode_name(FeatureMode m) { return m == FeatureMode::kFull ? "full" : "limited"; }

std::string resolve_stacks(const std::string& name, int stacks) {
  std::string s = name;
  const std::string placeholder = "SGL(k)";
  if (auto pos = s.find(placeholder); pos != std::string::npos)
    s.replace(pos, placeholder.size(), "SGL(" + std::to_string(stacks) + ")");
  return s;
}

}  // namespace

void PipelineConfig::validate() const {
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (stacks < 0) throw ConfigError("stacks must be >= 0");
  if (out_dir.empty()) throw ConfigError("output directory is empty");
  if (models.empty()) throw ConfigError("model roster is empty");
  if (!follows_path.empty() && messages_path.empty())
    throw ConfigError("a follows file was given without a messages file");
  if (messages_path.empty()) generator.validate();
  experiment_config().validate();
}

std::vector<std::string> PipelineConfig::roster_names() const {
  std::vector<std::string> out;
  for (const auto& m : models) {
    const std::string name = parse_model_spec(resolve_stacks(m, stacks)).name();
    if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
  }
  return out;
}

ExperimentConfig PipelineConfig::experiment_config() const {
  ExperimentConfig c = experiment;
  c.roster.clear();
  for (const auto& n : roster_names()) c.roster.push_back(parse_model_spec(n));
  c.seed = seed;
  c.threads = threads;
  c.features.drop_families.clear();
  if (feature_mode == FeatureMode::kLimited) c.features.drop_families = limited_drop;
  return c;
}

PipelineConfig parse_config(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j,
             {"schema_version", "seed", "threads", "paths", "features", "relations", "classifier",
              "stacking", "mrf", "psl", "split", "joint", "models", "generator"},
             "config");
  if (!j.contains("schema_version")) throw ConfigError("config lacks schema_version");
  int version = 0;
  read_field(j, "schema_version", version, "config");
  if (version != kConfigSchemaVersion)
    throw ConfigError("unsupported config schema_version " + std::to_string(version));

  PipelineConfig c;
  ExperimentConfig& e = c.experiment;
  read_field(j, "seed", c.seed, "config");
  read_field(j, "threads", c.threads, "config");
  read_field(j, "models", c.models, "config");

  if (auto it = j.find("paths"); it != j.end()) {
    check_keys(*it, {"messages", "follows", "out"}, "paths");
    read_field(*it, "messages", c.messages_path, "paths");
    read_field(*it, "follows", c.follows_path, "paths");
    read_field(*it, "out", c.out_dir, "paths");
  }
  if (auto it = j.find("features"); it != j.end()) {
    check_keys(*it, {"mode", "limited_drop", "ngrams", "ngram_n", "ngram_top_k"}, "features");
    std::string mode = feature_mode_name(c.feature_mode);
    read_field(*it, "mode", mode, "features");
    c.feature_mode = parse_feature_mode(mode);
    read_field(*it, "limited_drop", c.limited_drop, "features");
    read_field(*it, "ngrams", e.features.use_ngrams, "features");
    read_field(*it, "ngram_n", e.features.ngram_n, "features");
    read_field(*it, "ngram_top_k", e.features.ngram_top_k, "features");
    for (const auto& f : c.limited_drop)
      if (f != "content" && f != "user" && f != "graph" && f != "ngram")
        throw ConfigError("unknown feature family '" + f + "'");
    if (e.features.ngram_n < 1) throw ConfigError("ngram_n must be positive");
  }
  if (auto it = j.find("relations"); it != j.end()) {
    std::vector<std::string> names;
    read_field(j, "relations", names, "config");
    e.relations = parse_relations(names);
  }
  if (auto it = j.find("classifier"); it != j.end()) {
    check_keys(*it,
               {"l2", "l2_grid", "max_iter", "tol", "standardize", "stochastic", "batch_size",
                "learning_rate"},
               "classifier");
    read_field(*it, "l2", e.logistic.l2, "classifier");
    read_field(*it, "l2_grid", e.l2_grid, "classifier");
    read_field(*it, "max_iter", e.logistic.max_iter, "classifier");
    read_field(*it, "tol", e.logistic.tol, "classifier");
    read_field(*it, "standardize", e.logistic.standardize, "classifier");
    read_field(*it, "stochastic", e.logistic.stochastic, "classifier");
    read_field(*it, "batch_size", e.logistic.batch_size, "classifier");
    read_field(*it, "learning_rate", e.logistic.learning_rate, "classifier");
    if (e.logistic.max_iter < 1 || e.logistic.batch_size < 1 || !(e.logistic.tol > 0))
      throw ConfigError("classifier iteration settings must be positive");
  }
  if (auto it = j.find("stacking"); it != j.end()) {
    check_keys(*it, {"stacks", "pseudo_mode", "context_labels"}, "stacking");
    read_field(*it, "stacks", c.stacks, "stacking");
    std::string mode = pseudo_mode_name(e.pseudo_mode);
    read_field(*it, "pseudo_mode", mode, "stacking");
    e.pseudo_mode = parse_pseudo_mode(mode);
    read_field(*it, "context_labels", e.stacking_context_labels, "stacking");
  }
  if (auto it = j.find("mrf"); it != j.end()) {
    check_keys(*it, {"epsilon", "epsilon_grid", "max_iters", "damping", "tol"}, "mrf");
    std::map<std::string, double> eps;
    read_field(*it, "epsilon", eps, "mrf");
    for (const auto& [name, v] : eps) e.epsilons[parse_relation(name)] = v;
    read_field(*it, "epsilon_grid", e.epsilon_grid, "mrf");
    read_field(*it, "max_iters", e.bp.max_iters, "mrf");
    read_field(*it, "damping", e.bp.damping, "mrf");
    read_field(*it, "tol", e.bp.tol, "mrf");
    if (e.bp.max_iters < 1 || !(e.bp.damping >= 0 && e.bp.damping < 1) || !(e.bp.tol > 0))
      throw ConfigError("mrf: max_iters >= 1, damping in [0, 1) and tol > 0 required");
  }
  if (auto it = j.find("psl"); it != j.end()) {
    check_keys(*it,
               {"exponent", "learn", "steps", "learning_rate", "weights", "map_tol",
                "map_max_iter"},
               "psl");
    read_field(*it, "exponent", e.psl_exponent, "psl");
    read_field(*it, "learn", e.psl_learn, "psl");
    read_field(*it, "steps", e.psl_learning.steps, "psl");
    read_field(*it, "learning_rate", e.psl_learning.learning_rate, "psl");
    read_field(*it, "map_tol", e.map.tol, "psl");
    read_field(*it, "map_max_iter", e.map.max_iter, "psl");
    if (auto w = it->find("weights"); w != it->end()) {
      check_keys(*w, {"negative_prior", "positive_prior", "relations"}, "psl.weights");
      read_field(*w, "negative_prior", e.psl_weights.negative_prior, "psl.weights");
      read_field(*w, "positive_prior", e.psl_weights.positive_prior, "psl.weights");
      if (auto rel = w->find("relations"); rel != w->end()) {
        if (!rel->is_object()) throw ConfigError("psl.weights.relations must be an object");
        for (const auto& [name, cd] : rel->items()) {
          const Relation r = parse_relation(name);
          check_keys(cd, {"c", "d"}, "psl.weights.relations." + name);
          if (cd.contains("c")) read_field(cd, "c", e.psl_weights.message_to_hub[r], name);
          if (cd.contains("d")) read_field(cd, "d", e.psl_weights.hub_to_message[r], name);
        }
      }
    }
    if (e.psl_learning.steps < 0 || e.map.max_iter < 1 || !(e.map.tol > 0))
      throw ConfigError("psl iteration settings must be positive");
  }
  if (auto it = j.find("split"); it != j.end()) {
    check_keys(*it, {"n_subsets", "fractions"}, "split");
    read_field(*it, "n_subsets", e.n_subsets, "split");
    std::vector<double> fr;
    read_field(*it, "fractions", fr, "split");
    if (it->contains("fractions")) {
      if (fr.size() != 3) throw ConfigError("split.fractions needs three values");
      e.fractions = {fr[0], fr[1], fr[2]};
    }
  }
  if (auto it = j.find("joint"); it != j.end()) {
    check_keys(*it, {"context_labels"}, "joint");
    read_field(*it, "context_labels", e.use_context_labels, "joint");
  }
  if (auto it = j.find("generator"); it != j.end()) {
    GeneratorConfig& g = c.generator;
    check_keys(*it,
               {"n_users", "n_messages", "spam_prevalence", "n_campaigns", "campaign_size_spread",
                "accounts_per_campaign", "compromised_account_prob", "campaign_burst",
                "text_reuse_prob", "link_reuse_prob", "follow_density", "ham_vocab_size",
                "spam_vocab_size", "shared_vocab_size", "feature_noise"},
               "generator");
    read_field(*it, "n_users", g.n_users, "generator");
    read_field(*it, "n_messages", g.n_messages, "generator");
    read_field(*it, "spam_prevalence", g.spam_prevalence, "generator");
    read_field(*it, "n_campaigns", g.n_campaigns, "generator");
    read_field(*it, "campaign_size_spread", g.campaign_size_spread, "generator");
    read_field(*it, "accounts_per_campaign", g.accounts_per_campaign, "generator");
    read_field(*it, "compromised_account_prob", g.compromised_account_prob, "generator");
    read_field(*it, "campaign_burst", g.campaign_burst, "generator");
    read_field(*it, "text_reuse_prob", g.text_reuse_prob, "generator");
    read_field(*it, "link_reuse_prob", g.link_reuse_prob, "generator");
    read_field(*it, "follow_density", g.follow_density, "generator");
    read_field(*it, "ham_vocab_size", g.ham_vocab_size, "generator");
    read_field(*it, "spam_vocab_size", g.spam_vocab_size, "generator");
    read_field(*it, "shared_vocab_size", g.shared_vocab_size, "generator");
    read_field(*it, "feature_noise", g.feature_noise, "generator");
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const PipelineConfig& c) {
  const ExperimentConfig& e = c.experiment;
  const GeneratorConfig& g = c.generator;
  ojson j;
  j["schema_version"] = kConfigSchemaVersion;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["paths"] = {{"messages", c.messages_path}, {"follows", c.follows_path}, {"out", c.out_dir}};
  j["features"] = {{"mode", feature_mode_name(c.feature_mode)},
                   {"limited_drop", c.limited_drop},
                   {"ngrams", e.features.use_ngrams},
                   {"ngram_n", e.features.ngram_n},
                   {"ngram_top_k", e.features.ngram_top_k}};
  auto rel = ojson::array();
  for (Relation r : e.relations) rel.push_back(relation_name(r));
  j["relations"] = rel;
  j["classifier"] = {{"l2", e.logistic.l2},
                     {"l2_grid", e.l2_grid},
                     {"max_iter", e.logistic.max_iter},
                     {"tol", e.logistic.tol},
                     {"standardize", e.logistic.standardize},
                     {"stochastic", e.logistic.stochastic},
                     {"batch_size", e.logistic.batch_size},
                     {"learning_rate", e.logistic.learning_rate}};
  j["stacking"] = {{"stacks", c.stacks},
                   {"pseudo_mode", pseudo_mode_name(e.pseudo_mode)},
                   {"context_labels", e.stacking_context_labels}};
  ojson eps = ojson::object();
  for (const auto& [r, v] : e.epsilons) eps[std::string(relation_name(r))] = v;
  j["mrf"] = {{"epsilon", eps},
              {"epsilon_grid", e.epsilon_grid},
              {"max_iters", e.bp.max_iters},
              {"damping", e.bp.damping},
              {"tol", e.bp.tol}};
  ojson wrel = ojson::object();
  for (const auto& [r, v] : e.psl_weights.message_to_hub) wrel[std::string(relation_name(r))]["c"] = v;
  for (const auto& [r, v] : e.psl_weights.hub_to_message) wrel[std::string(relation_name(r))]["d"] = v;
  j["psl"] = {{"exponent", e.psl_exponent},
              {"learn", e.psl_learn},
              {"steps", e.psl_learning.steps},
              {"learning_rate", e.psl_learning.learning_rate},
              {"weights",
               {{"negative_prior", e.psl_weights.negative_prior},
                {"positive_prior", e.psl_weights.positive_prior},
                {"relations", wrel}}},
              {"map_tol", e.map.tol},
              {"map_max_iter", e.map.max_iter}};
  j["split"] = {{"n_subsets", e.n_subsets},
                {"fractions", {e.fractions.train, e.fractions.validation, e.fractions.test}}};
  j["joint"] = {{"context_labels", e.use_context_labels}};
  j["models"] = c.models;
  j["generator"] = {{"n_users", g.n_users},
                    {"n_messages", g.n_messages},
                    {"spam_prevalence", g.spam_prevalence},
                    {"n_campaigns", g.n_campaigns},
                    {"campaign_size_spread", g.campaign_size_spread},
                    {"accounts_per_campaign", g.accounts_per_campaign},
                    {"compromised_account_prob", g.compromised_account_prob},
                    {"campaign_burst", g.campaign_burst},
                    {"text_reuse_prob", g.text_reuse_prob},
                    {"link_reuse_prob", g.link_reuse_prob},
                    {"follow_density", g.follow_density},
                    {"ham_vocab_size", g.ham_vocab_size},
                    {"spam_vocab_size", g.spam_vocab_size},
                    {"shared_vocab_size", g.shared_vocab_size},
                    {"feature_noise", g.feature_noise}};
  return j.dump(2) + "\n";
}

void apply_overrides(PipelineConfig& c, const ConfigOverrides& o) {
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  if (o.feature_mode) c.feature_mode = parse_feature_mode(*o.feature_mode);
  if (o.stacks) c.stacks = *o.stacks;
  if (o.models) c.models = *o.models;
  if (o.out) c.out_dir = *o.out;
  c.validate();
}

// ---- artifacts ----------------------------------------------------------------------

namespace {

struct Layout {
  fs::path root;

  fs::path messages() const { return root / "data" / "messages.jsonl"; }
  fs::path follows() const { return root / "data" / "follows.tsv"; }
  fs::path split() const { return root / "features" / "split.json"; }
  fs::path graph() const { return root / "features" / "graph_features.tsv"; }
  fs::path subset_dir(const char* stage, std::size_t s) const {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "subset_%02zu", s);
    return root / stage / buf;
  }
  fs::path features(std::size_t s) const { return subset_dir("features", s) / "features.tsv"; }
  fs::path vocab(std::size_t s) const { return subset_dir("features", s) / "vocab.json"; }
  fs::path models(std::size_t s) const { return subset_dir("models", s); }
  fs::path train_diag() const { return root / "models" / "diagnostics.json"; }
  fs::path predictions(std::size_t s) const {
    return subset_dir("predictions", s).replace_extension(".tsv");
  }
  fs::path infer_diag() const { return root / "predictions" / "diagnostics.json"; }
  fs::path report_dir() const { return root / "report"; }
  fs::path log(const std::string& stage) const { return root / "logs" / (stage + ".json"); }
};

std::string relative(const Layout& l, const fs::path& p) {
  return fs::relative(p, l.root).generic_string();
}

/// Writes via a temporary file and rename so a failed stage leaves no
/// half-written artifact behind.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& fn) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    fn(out);
    out.flush();
    if (!out) throw DataError("write failed for '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

std::ifstream open_artifact(const Layout& l, const fs::path& p, const std::string& stage,
                            const std::string& producer) {
  std::ifstream in(p, std::ios::binary);
  if (!in)
    throw DataError(stage + ": missing artifact '" + relative(l, p) + "' (run '" + producer +
                    "' first)");
  return in;
}

std::vector<Message> load_messages(const Layout& l, const std::string& stage) {
  auto in = open_artifact(l, l.messages(), stage, "generate");
  auto msgs = read_messages(in);
  sort_chronologically(msgs);
  return msgs;
}

SplitPlan load_split(const Layout& l, const std::string& stage) {
  auto in = open_artifact(l, l.split(), stage, "featurize");
  return read_split_plan(in);
}

FeatureMatrix load_features(const Layout& l, std::size_t s, const std::string& stage) {
  auto in = open_artifact(l, l.features(s), stage, "featurize");
  return read_feature_matrix(in);
}

SplitSubset local_ranges(const SplitSubset& sub) {
  const std::size_t off = sub.train.begin;
  return {{sub.train.begin - off, sub.train.end - off},
          {sub.validation.begin - off, sub.validation.end - off},
          {sub.test.begin - off, sub.test.end - off}};
}

std::span<const Message> subset_span(const std::vector<Message>& msgs, const SplitSubset& sub) {
  return std::span<const Message>(msgs).subspan(sub.train.begin, sub.test.end - sub.train.begin);
}

std::string model_file_stem(const std::string& base) {
  if (base == "Independent") return "independent";
  return "sgl" + std::to_string(parse_model_spec(base).stacks);
}

ojson diagnostics_json(const Diagnostics& d) {
  return {{"bp_runs", d.bp_runs},
          {"bp_not_converged", d.bp_not_converged},
          {"map_runs", d.map_runs},
          {"map_not_converged", d.map_not_converged},
          {"classifier_runs", d.classifier_runs},
          {"classifier_not_converged", d.classifier_not_converged}};
}

Diagnostics read_diagnostics(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  Diagnostics d;
  d.bp_runs = j.at("bp_runs").get<std::size_t>();
  d.bp_not_converged = j.at("bp_not_converged").get<std::size_t>();
  d.map_runs = j.at("map_runs").get<std::size_t>();
  d.map_not_converged = j.at("map_not_converged").get<std::size_t>();
  d.classifier_runs = j.at("classifier_runs").get<std::size_t>();
  d.classifier_not_converged = j.at("classifier_not_converged").get<std::size_t>();
  return d;
}

void write_epsilons(std::ostream& out, const std::string& base, const EpsilonMap& eps) {
  ojson j;
  j["format"] = "eggs-epsilons";
  j["version"] = 1;
  j["base"] = base;
  ojson e = ojson::object();
  for (const auto& [r, v] : eps) e[std::string(relation_name(r))] = v;
  j["epsilon"] = e;
  out << j.dump(1) << '\n';
}

EpsilonMap read_epsilons(std::istream& in) {
  const auto j = nlohmann::json::parse(in);
  if (j.value("format", "") != "eggs-epsilons") throw DataError("not an epsilon document");
  EpsilonMap eps;
  for (const auto& [name, v] : j.at("epsilon").items()) eps[parse_relation(name)] = v.get<double>();
  return eps;
}

void write_stage_log(const Layout& l, const PipelineConfig& c, const std::string& stage,
                     const ojson& summary) {
  ojson j;
  j["format"] = "eggs-stage-log";
  j["version"] = 1;
  j["stage"] = stage;
  j["config"] = ojson::parse(dump_config(c));
  j["summary"] = summary;
  write_atomic(l.log(stage), [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

struct RosterNeeds {
  std::set<int> stacks;
  std::set<std::string> mrf_bases, psl_bases;
};

RosterNeeds roster_needs(const ExperimentConfig& e) {
  RosterNeeds n;
  for (const auto& m : e.roster) {
    if (m.stacks >= 0) n.stacks.insert(m.stacks);
    if (m.joint == JointKind::kMrf) n.mrf_bases.insert(m.base_name());
    if (m.joint == JointKind::kPsl) n.psl_bases.insert(m.base_name());
  }
  return n;
}

}  // namespace

// ---- stages -------------------------------------------------------------------------

void cmd_generate(const PipelineConfig& c) {
  c.validate();
  const Layout l{c.out_dir};
  std::vector<Message> msgs;
  std::vector<std::pair<std::string, std::string>> follows;
  ojson summary;
  if (c.messages_path.empty()) {
    GeneratorConfig g = c.generator;
    g.seed = c.seed;
    SyntheticDataset ds = generate(g);
    msgs = std::move(ds.messages);
    follows = std::move(ds.follows);
    summary["source"] = "synthetic";
  } else {
    msgs = read_messages_file(c.messages_path);
    if (!c.follows_path.empty()) follows = read_follows_file(c.follows_path);
    summary["source"] = c.messages_path;
  }
  const ValidationReport rep = validate_dataset(msgs);
  if (!rep.duplicate_ids.empty())
    throw DataError("generate: dataset has " + std::to_string(rep.duplicate_ids.size()) +
                    " duplicate message ids, first '" + rep.duplicate_ids.front() + "'");
  if (!rep.bad_timestamp_ids.empty())
    throw DataError("generate: " + std::to_string(rep.bad_timestamp_ids.size()) +
                    " messages have unusable timestamps, first '" +
                    rep.bad_timestamp_ids.front() + "'");
  sort_chronologically(msgs);

  write_atomic(l.messages(), [&](std::ostream& out) { write_messages(out, msgs); });
  write_atomic(l.follows(), [&](std::ostream& out) { write_follows(out, follows); });
  std::size_t spam = 0;
  for (const auto& m : msgs) spam += m.is_spam() ? 1 : 0;
  summary["messages"] = msgs.size();
  summary["labelled"] = rep.n_labeled;
  summary["spam"] = spam;
  summary["follows"] = follows.size();
  write_stage_log(l, c, "generate", summary);
  log::info("generate: " + std::to_string(msgs.size()) + " messages, " + std::to_string(spam) +
            " spam");
}

void cmd_featurize(const PipelineConfig& c) {
  c.validate();
  const Layout l{c.out_dir};
  const ExperimentConfig e = c.experiment_config();
  const auto msgs = load_messages(l, "featurize");
  auto fin = open_artifact(l, l.follows(), "featurize", "generate");
  const auto follows = read_follows(fin);

  const SplitPlan plan = chronological_split(msgs, e.n_subsets, e.fractions);
  const GraphFeatureTable graph = compute_graph_features(build_follower_graph(follows));
  write_atomic(l.split(), [&](std::ostream& out) { write_split_plan(out, plan); });
  write_atomic(l.graph(), [&](std::ostream& out) { write_graph_features(out, graph); });

  std::vector<std::size_t> columns(plan.n_subsets());
  parallel_for(plan.n_subsets(), e.threads, [&](std::size_t s) {
    const auto& sub = plan.subsets[s];
    const SubsetFeatures f =
        featurize_subset(subset_span(msgs, sub), local_ranges(sub), graph, e.features);
    write_atomic(l.features(s), [&](std::ostream& out) { write_feature_matrix(out, f.X); });
    write_atomic(l.vocab(s), [&](std::ostream& out) { write_vocabulary(out, f.vocab); });
    columns[s] = f.X.cols();
  });
  write_stage_log(l, c, "featurize",
                  {{"subsets", plan.n_subsets()}, {"columns_per_subset", columns}});
  log::info("featurize: " + std::to_string(plan.n_subsets()) + " subsets");
}

void cmd_train(const PipelineConfig& c) {
  c.validate();
  const Layout l{c.out_dir};
  const ExperimentConfig e = c.experiment_config();
  const auto msgs = load_messages(l, "train");
  const SplitPlan plan = load_split(l, "train");
  std::vector<FeatureMatrix> X;
  for (std::size_t s = 0; s < plan.n_subsets(); ++s) X.push_back(load_features(l, s, "train"));

  std::vector<Diagnostics> diags(plan.n_subsets());
  parallel_for(plan.n_subsets(), e.threads, [&](std::size_t s) {
    const auto& sub = plan.subsets[s];
    const SplitSubset local = local_ranges(sub);
    ExperimentConfig cfg = e;
    cfg.logistic.seed = e.seed + s;
    const SubsetModels m =
        train_subset(subset_span(msgs, sub), local.train, local.validation, X[s], cfg, diags[s]);
    const fs::path dir = l.models(s);
    write_atomic(dir / "independent.json",
                 [&](std::ostream& out) { write_linear_model(out, m.independent); });
    for (const auto& [k, sm] : m.stacked)
      write_atomic(dir / ("sgl" + std::to_string(k) + ".json"),
                   [&](std::ostream& out) { write_stacked_model(out, sm); });
    for (const auto& [base, eps] : m.epsilons)
      write_atomic(dir / ("mrf_" + model_file_stem(base) + ".json"),
                   [&](std::ostream& out) { write_epsilons(out, base, eps); });
    for (const auto& [base, w] : m.psl)
      write_atomic(dir / ("psl_" + model_file_stem(base) + ".json"), [&](std::ostream& out) {
        write_rule_weights(out, w, e.psl_exponent, "learned on validation, base " + base);
      });
  });
  Diagnostics total;
  for (const auto& d : diags) total += d;
  write_atomic(l.train_diag(),
               [&](std::ostream& out) { out << diagnostics_json(total).dump(2) << '\n'; });
  write_stage_log(l, c, "train", diagnostics_json(total));
  log::info("train: " + std::to_string(total.classifier_runs) + " classifier fits");
}

void cmd_infer(const PipelineConfig& c) {
  c.validate();
  const Layout l{c.out_dir};
  const ExperimentConfig e = c.experiment_config();
  const auto msgs = load_messages(l, "infer");
  const SplitPlan plan = load_split(l, "infer");
  const RosterNeeds needs = roster_needs(e);

  std::vector<SubsetModels> models(plan.n_subsets());
  std::vector<FeatureMatrix> X;
  for (std::size_t s = 0; s < plan.n_subsets(); ++s) {
    X.push_back(load_features(l, s, "infer"));
    const fs::path dir = l.models(s);
    SubsetModels& m = models[s];
    {
      auto in = open_artifact(l, dir / "independent.json", "infer", "train");
      m.independent = read_linear_model(in);
    }
    for (int k : needs.stacks) {
      auto in = open_artifact(l, dir / ("sgl" + std::to_string(k) + ".json"), "infer", "train");
      m.stacked.emplace(k, read_stacked_model(in));
    }
    for (const auto& base : needs.mrf_bases) {
      auto in = open_artifact(l, dir / ("mrf_" + model_file_stem(base) + ".json"), "infer", "train");
      m.epsilons.emplace(base, read_epsilons(in));
    }
    for (const auto& base : needs.psl_bases) {
      auto in = open_artifact(l, dir / ("psl_" + model_file_stem(base) + ".json"), "infer", "train");
      m.psl.emplace(base, read_rule_weights(in));
    }
  }

  std::vector<Diagnostics> diags(plan.n_subsets());
  parallel_for(plan.n_subsets(), e.threads, [&](std::size_t s) {
    const auto& sub = plan.subsets[s];
    const auto span = subset_span(msgs, sub);
    const auto preds = infer_subset(span, local_ranges(sub), X[s], models[s], e, diags[s]);
    write_atomic(l.predictions(s), [&](std::ostream& out) {
      out << "#eggs-predictions\t1\n";
      for (const auto& spec : e.roster) {
        auto it = preds.find(spec.name());
        if (it == preds.end()) continue;
        for (std::size_t i = sub.test.begin; i < sub.test.end; ++i) {
          const std::string& id = msgs[i].id;
          out << spec.name() << '\t' << id << '\t' << format_double(it->second.at(id)) << '\n';
        }
      }
    });
  });
  Diagnostics total;
  for (const auto& d : diags) total += d;
  write_atomic(l.infer_diag(),
               [&](std::ostream& out) { out << diagnostics_json(total).dump(2) << '\n'; });
  write_stage_log(l, c, "infer", diagnostics_json(total));
  log::info("infer: predictions for " + std::to_string(e.roster.size()) + " models");
}

EvaluationReport cmd_eval(const PipelineConfig& c) {
  c.validate();
  const Layout l{c.out_dir};
  const ExperimentConfig e = c.experiment_config();
  const auto msgs = load_messages(l, "eval");
  const SplitPlan plan = load_split(l, "eval");

  std::vector<std::map<std::string, Predictions>> preds(plan.n_subsets());
  for (std::size_t s = 0; s < plan.n_subsets(); ++s) {
    auto in = open_artifact(l, l.predictions(s), "eval", "infer");
    std::string line;
    if (!std::getline(in, line) || line != "#eggs-predictions\t1")
      throw DataError("eval: '" + relative(l, l.predictions(s)) + "' is not a prediction file");
    while (std::getline(in, line)) {
      const auto t1 = line.find('\t');
      const auto t2 = line.find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos)
        throw DataError("eval: malformed prediction line in '" + relative(l, l.predictions(s)) + "'");
      double v = 0;
      const char* first = line.data() + t2 + 1;
      const char* last = line.data() + line.size();
      if (std::from_chars(first, last, v).ec != std::errc())
        throw DataError("eval: bad score in '" + relative(l, l.predictions(s)) + "'");
      preds[s][line.substr(0, t1)][line.substr(t1 + 1, t2 - t1 - 1)] = v;
    }
  }

  std::vector<std::string> names;
  for (const auto& m : e.roster) names.push_back(m.name());
  EvaluationReport report = evaluate_predictions(msgs, plan, names, preds, e.relations);
  for (const fs::path& p : {l.train_diag(), l.infer_diag()}) {
    auto in = open_artifact(l, p, "eval", p == l.train_diag() ? "train" : "infer");
    report.diagnostics += read_diagnostics(in);
  }

  const fs::path dir = l.report_dir();
  write_atomic(dir / "report.txt", [&](std::ostream& out) { write_report_table(out, report); });
  write_atomic(dir / "report.json", [&](std::ostream& out) { write_report_json(out, report); });
  write_atomic(dir / "coverage.tsv",
               [&](std::ostream& out) { write_coverage(out, report.coverage); });
  write_stage_log(l, c, "eval", {{"models", report.models.size()}});
  return report;
}

EvaluationReport cmd_run_all(const PipelineConfig& c) {
  cmd_generate(c);
  cmd_featurize(c);
  cmd_train(c);
  cmd_infer(c);
  return cmd_eval(c);
}

}  // namespace eggs
