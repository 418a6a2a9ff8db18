#include <CLI11.hpp>

#include <iostream>

#include "eggs/error.hpp"
#include "eggs/log.hpp"
#include "eggs/pipeline.hpp"

namespace {

struct Options {
  std::string config_path;
  eggs::ConfigOverrides overrides;
  std::string models;
  bool quiet = false;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "Pipeline config file (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.overrides.seed, "Global seed");
  cmd->add_option("--threads", o.overrides.threads, "Worker threads for per-subset work")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--feature-mode", o.overrides.feature_mode, "full | limited")
      ->check(CLI::IsMember({"full", "limited"}));
  cmd->add_option("--stacks", o.overrides.stacks, "Depth used for SGL(k) in the roster")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--models", o.models, "Comma-separated roster, e.g. Independent,SGL(1),MRF");
  cmd->add_option("--out", o.overrides.out, "Output directory");
  cmd->add_flag("-q,--quiet", o.quiet, "Only print warnings and errors");
  cmd->add_flag("-v,--verbose", o.verbose, "Debug logging");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (ch != ' ') {
      cur += ch;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eggs: relational spam classification pipeline"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"generate", "Synthesize or ingest the dataset"},
      {"featurize", "Split chronologically and build feature matrices"},
      {"train", "Fit classifiers, stacked models and joint-model parameters"},
      {"infer", "Predict test messages with every roster model"},
      {"eval", "Compute the evaluation report"},
      {"run-all", "Run every stage in order"},
      {"print-config", "Print the effective configuration"}};
  for (const auto& [name, desc] : commands) add_common(app.add_subcommand(name, desc), o);

  CLI11_PARSE(app, argc, argv);
  const std::string cmd = app.get_subcommands().front()->get_name();

  if (o.verbose) eggs::log::set_level(eggs::log::Level::kDebug);
  if (o.quiet) eggs::log::set_level(eggs::log::Level::kWarn);

  try {
    eggs::PipelineConfig config =
        o.config_path.empty() ? eggs::PipelineConfig{} : eggs::load_config(o.config_path);
    if (!o.models.empty()) o.overrides.models = split_list(o.models);
    eggs::apply_overrides(config, o.overrides);

    if (cmd == "print-config") {
      std::cout << eggs::dump_config(config);
    } else if (cmd == "generate") {
      eggs::cmd_generate(config);
    } else if (cmd == "featurize") {
      eggs::cmd_featurize(config);
    } else if (cmd == "train") {
      eggs::cmd_train(config);
    } else if (cmd == "infer") {
      eggs::cmd_infer(config);
    } else {
      const auto report = cmd == "eval" ? eggs::cmd_eval(config) : eggs::cmd_run_all(config);
      eggs::write_report_table(std::cout, report);
    }
  } catch (const eggs::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const eggs::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
