#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eggs/error.hpp"
#include "eggs/log.hpp"
#include "eggs/pipeline.hpp"

using namespace eggs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("eggs_test_" + name);
  fs::remove_all(p);
  return p;
}

PipelineConfig small_config(const fs::path& out) {
  PipelineConfig c;
  c.out_dir = out.string();
  c.generator.n_users = 300;
  c.generator.n_messages = 3000;
  c.generator.n_campaigns = 10;
  c.experiment.n_subsets = 3;
  c.experiment.psl_learning.steps = 3;
  c.models = {"Independent", "SGL(1)", "MRF", "PSL", "SGL(k)+MRF"};
  c.feature_mode = FeatureMode::kLimited;
  return c;
}

std::string with_key(const std::string& extra) {
  return "{\"schema_version\": 1" + extra + "}";
}

}  // namespace

TEST_CASE("config schema checks") {
  CHECK_THROWS_AS(parse_config("{}"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 2}"), ConfigError);
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config(with_key(", \"colour\": 1")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_key(", \"features\": {\"mode\": \"partial\"}")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_key(", \"seed\": \"seven\"")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_key(", \"models\": []")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_key(", \"models\": [\"Bayes\"]")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_key(", \"mrf\": {\"epsilon\": 0.6}")), ConfigError);
  CHECK_THROWS_AS(parse_config(with_key(", \"generator\": {\"spam_prevalence\": 2}")), ConfigError);

  auto c = parse_config(with_key(", \"seed\": 11, \"stacking\": {\"stacks\": 2}"));
  CHECK(c.seed == 11);
  CHECK(c.stacks == 2);
}

TEST_CASE("dumped config parses back to the same document") {
  PipelineConfig c;
  c.seed = 99;
  c.feature_mode = FeatureMode::kLimited;
  const auto text = dump_config(c);
  const auto back = parse_config(text);
  CHECK(back.seed == 99);
  CHECK(back.feature_mode == FeatureMode::kLimited);
  CHECK(dump_config(back) == text);
}

TEST_CASE("overrides and roster resolution") {
  PipelineConfig c;
  ConfigOverrides o;
  o.seed = 3;
  o.stacks = 2;
  o.feature_mode = "limited";
  o.models = std::vector<std::string>{"Independent", "SGL(k)", "SGL(2)", "SGL(k)+PSL"};
  o.out = "elsewhere";
  apply_overrides(c, o);
  CHECK(c.seed == 3);
  CHECK(c.out_dir == "elsewhere");
  CHECK(c.feature_mode == FeatureMode::kLimited);
  CHECK(c.roster_names() == std::vector<std::string>{"Independent", "SGL(2)", "SGL(2)+PSL"});
  CHECK(c.experiment_config().seed == 3);

  ConfigOverrides bad;
  bad.feature_mode = "medium";
  CHECK_THROWS_AS(apply_overrides(c, bad), ConfigError);
  ConfigOverrides zero;
  zero.threads = 0;
  CHECK_THROWS_AS(apply_overrides(c, zero), ConfigError);
}

TEST_CASE("stages name the missing artifact") {
  const auto dir = fresh_dir("missing");
  auto c = small_config(dir);
  try {
    cmd_featurize(c);
    FAIL("cmd_featurize should fail");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("messages.jsonl") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("stage by stage run with idempotent featurize") {
  log::set_level(log::Level::kWarn);
  const auto dir = fresh_dir("stages");
  auto c = small_config(dir);
  cmd_generate(c);
  cmd_featurize(c);
  const auto first = slurp(dir / "features" / "subset_00" / "features.tsv");
  const auto split = slurp(dir / "features" / "split.json");
  CHECK_FALSE(first.empty());
  cmd_featurize(c);
  CHECK(slurp(dir / "features" / "subset_00" / "features.tsv") == first);
  CHECK(slurp(dir / "features" / "split.json") == split);

  CHECK_THROWS_AS(cmd_infer(c), DataError);  // nothing trained yet
  cmd_train(c);
  try {
    cmd_eval(c);
    FAIL("cmd_eval should fail before infer");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("predictions/subset_00.tsv") != std::string::npos);
  }
  cmd_infer(c);
  const auto report = cmd_eval(c);
  CHECK(report.models.size() == 5);
  for (const auto& name : c.roster_names()) {
    const auto* m = report.find(name);
    REQUIRE(m != nullptr);
    CHECK(m->all.aupr.has_value());
    CHECK(m->per_subset.size() == 3);
  }
  CHECK(fs::exists(dir / "report" / "report.txt"));
  CHECK(fs::exists(dir / "report" / "report.json"));
  CHECK(fs::exists(dir / "logs" / "train.json"));
  fs::remove_all(dir);
}

TEST_CASE("external datasets are ingested") {
  const auto dir = fresh_dir("ingest");
  fs::create_directories(dir);
  std::vector<Message> ms;
  for (int i = 0; i < 60; ++i) {
    Message m;
    m.id = "x" + std::to_string(i);
    m.user_id = "u" + std::to_string(i % 7);
    m.text = i % 5 == 0 ? "buy now http://cheap.example" : "hello " + std::to_string(i);
    m.timestamp = 60 - i;  // reverse order on disk
    m.label = i % 5 == 0 ? Label::kSpam : Label::kHam;
    annotate_from_text(m);
    ms.push_back(m);
  }
  {
    std::ofstream out(dir / "in.jsonl");
    write_messages(out, ms);
  }
  PipelineConfig c;
  c.out_dir = (dir / "out").string();
  c.messages_path = (dir / "in.jsonl").string();
  cmd_generate(c);
  std::ifstream in(dir / "out" / "data" / "messages.jsonl");
  auto back = read_messages(in);
  CHECK(back.size() == 60);
  CHECK(is_chronological(back));

  ms.push_back(ms.front());
  {
    std::ofstream out(dir / "dup.jsonl");
    write_messages(out, ms);
  }
  c.messages_path = (dir / "dup.jsonl").string();
  CHECK_THROWS_AS(cmd_generate(c), DataError);
  fs::remove_all(dir);
}

TEST_CASE("thread count does not change results") {
  log::set_level(log::Level::kWarn);
  const auto a = fresh_dir("threads1");
  const auto b = fresh_dir("threads4");
  auto ca = small_config(a);
  auto cb = small_config(b);
  cb.threads = 4;
  cmd_run_all(ca);
  cmd_run_all(cb);
  CHECK(slurp(a / "report" / "report.txt") == slurp(b / "report" / "report.txt"));
  CHECK(slurp(a / "report" / "report.json") == slurp(b / "report" / "report.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}
