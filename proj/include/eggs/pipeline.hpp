#pragma once

#include <optional>
#include <string>
#include <vector>

#include "eggs/evaluation.hpp"
#include "eggs/experiment.hpp"
#include "eggs/synthetic.hpp"

namespace eggs {

inline constexpr int kConfigSchemaVersion = 1;

enum class FeatureMode { kFull, kLimited };

struct PipelineConfig {
  /// Input dataset. When `messages_path` is empty the generate stage
  /// synthesizes one from `generator` instead.
  std::string messages_path;
  std::string follows_path;
  std::string out_dir = "eggs_out";

  std::uint64_t seed = 7;
  int threads = 1;
  FeatureMode feature_mode = FeatureMode::kFull;
  /// Families removed in limited mode.
  std::vector<std::string> limited_drop{"graph", "ngram"};
  /// Depth substituted for "SGL(k)" in roster names.
  int stacks = 1;
  std::vector<std::string> models{"Independent", "SGL(1)", "SGL(2)", "MRF",
                                  "PSL",         "SGL(k)+MRF", "SGL(k)+PSL"};

  GeneratorConfig generator;
  /// Everything except roster, seed, threads and the dropped families, which
  /// are derived from the fields above by experiment_config().
  ExperimentConfig experiment;

  /// Throws ConfigError when the configuration is inconsistent.
  void validate() const;
  /// Roster names with "SGL(k)" resolved, deduplicated in order.
  std::vector<std::string> roster_names() const;
  ExperimentConfig experiment_config() const;
};

/// Parses the structured config document. Unknown keys, a missing or
/// unsupported schema_version, and out-of-range values raise ConfigError.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
/// The effective configuration as a config document (round-trips through parse_config).
std::string dump_config(const PipelineConfig& config);

/// Command-line overrides, applied on top of the config file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> feature_mode;
  std::optional<int> stacks;
  std::optional<std::vector<std::string>> models;
  std::optional<std::string> out;
};

void apply_overrides(PipelineConfig& config, const ConfigOverrides& o);

// Stages. Each reads only files written by earlier stages under out_dir,
// writes its own outputs atomically, and records its parameters under
// out_dir/logs. A missing input raises DataError naming the artifact.
void cmd_generate(const PipelineConfig& config);
void cmd_featurize(const PipelineConfig& config);
void cmd_train(const PipelineConfig& config);
void cmd_infer(const PipelineConfig& config);
EvaluationReport cmd_eval(const PipelineConfig& config);
EvaluationReport cmd_run_all(const PipelineConfig& config);

}  // namespace eggs
