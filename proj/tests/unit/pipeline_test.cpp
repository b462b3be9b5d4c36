#include <cstdlib>

#include <gtest/gtest.h>

#include "procmine/pipeline.hpp"
#include "support/errors.hpp"
#include "support/fixtures.hpp"
#include "support/graph_match.hpp"

using namespace procmine;

namespace {

std::filesystem::path wordlist() { return fixtures::root() / "data/wordlist/en_top10k.txt"; }

// A training corpus written to disk once per process.
const std::filesystem::path& training_dir() {
  static fixtures::TempDir dir;
  static const bool written = [] {
    CorpusSpec s;
    s.seed = 5;
    s.n_docs = 30;
    write_corpus(generate_corpus(s), dir.path());
    return true;
  }();
  (void)written;
  return dir.path();
}

PipelineConfig base(const fixtures::TempDir& dir) {
  PipelineConfig cfg;
  cfg.wordlist = wordlist();
  cfg.train_annotations = training_dir() / "annotations.jsonl";
  cfg.model = dir / "model.json";
  cfg.out = dir / "flows";
  return cfg;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PROCMINE_CLI) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Config, JsonFieldsAndRelativePaths) {
  const auto j = nlohmann::json::parse(R"({
    "features": {"ngram_max": 2, "context_k": 3},
    "search": {"threshold": 0.7},
    "flow": {"similarity_threshold": 0.6, "note": false},
    "svm": {"kernel": {"type": "LINEAR"}, "reg_c": 4},
    "seed": 3,
    "paths": {"model": "m.json", "inputs": "/abs/pages"}
  })");
  const auto cfg = pipeline_config_from_json(j, "/base");
  EXPECT_EQ(cfg.features.ngram_max, 2);
  EXPECT_EQ(cfg.features.context_k, 3);
  EXPECT_DOUBLE_EQ(cfg.search.threshold, 0.7);
  EXPECT_DOUBLE_EQ(cfg.similarity_threshold, 0.6);
  EXPECT_FALSE(cfg.rules.note);
  EXPECT_TRUE(cfg.rules.overlap);
  EXPECT_EQ(cfg.kernel.kind, KernelKind::Linear);
  EXPECT_DOUBLE_EQ(cfg.reg_c, 4.0);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.model, std::filesystem::path("/base/m.json"));
  EXPECT_EQ(cfg.inputs, std::filesystem::path("/abs/pages"));
}

TEST(Config, InvalidValuesAreConfigErrors) {
  EXPECT_ERROR_CODE(pipeline_config_from_json(nlohmann::json::parse(R"({"search": {"threshold": 2}})")),
                    ErrorCode::ConfigError);
  EXPECT_ERROR_CODE(pipeline_config_from_json(nlohmann::json::parse(R"({"features": {"context_k": 9}})")),
                    ErrorCode::ConfigError);
  EXPECT_ERROR_CODE(pipeline_config_from_json(nlohmann::json::parse(R"({"seed": "x"})")), ErrorCode::ConfigError);
  EXPECT_ERROR_CODE(pipeline_config_from_json(nlohmann::json::array()), ErrorCode::ConfigError);
  fixtures::TempDir dir;
  EXPECT_ERROR_CODE(load_pipeline_config(dir / "missing.json"), ErrorCode::ConfigError);
  write_file(dir / "bad.json", "{");
  EXPECT_ERROR_CODE(load_pipeline_config(dir / "bad.json"), ErrorCode::ConfigError);
}

// The model is resolved before any input is touched, so a missing model wins over missing inputs.
TEST(Pipeline, MissingModelFailsFirst) {
  fixtures::TempDir dir;
  PipelineConfig cfg;
  cfg.model = dir / "absent.json";
  cfg.inputs = dir / "no-such-pages";
  cfg.out = dir / "flows";
  EXPECT_ERROR_CODE(run_pipeline(cfg), ErrorCode::ModelNotFound);
  EXPECT_FALSE(std::filesystem::exists(cfg.out));
}

TEST(Pipeline, FixturePageYieldsTheExpectedGraph) {
  fixtures::TempDir dir;
  auto cfg = base(dir);
  cfg.inputs = fixtures::path("pages/node_error_561.html");
  const auto report = run_pipeline(cfg);
  EXPECT_TRUE(std::filesystem::exists(cfg.model));
  EXPECT_TRUE(std::filesystem::exists(cfg.out / "run_report.json"));
  ASSERT_EQ(report.files.size(), 1u);
  const FlowGraph* steps = nullptr;
  std::vector<FlowGraph> graphs;
  for (const auto& id : report.files[0].flows) {
    graphs.push_back(flow_graph_from_json(nlohmann::json::parse(read_file(cfg.out / (id + ".json")))));
  }
  for (const auto& g : graphs) {
    EXPECT_TRUE(validate_flow_graph(g).empty());
    if (g.node_path == NodePath{1, 3, 1, 1, 15}) steps = &g;
  }
  ASSERT_NE(steps, nullptr);
  const graph_match::Pattern want{{{NodeKind::Decision, "LEDs do not show a fault"},
                                  {NodeKind::Instruction, "power off both power supplies"},
                                  {NodeKind::Instruction, "Wait 20 seconds"},
                                  {NodeKind::Decision, "both node canisters continue to report this error"},
                                  {NodeKind::Instruction, "replace the enclosure chassis"}},
                                 {{0, 1, EdgeLabel::True},
                                  {1, 2, EdgeLabel::Next},
                                  {2, 3, EdgeLabel::Next},
                                  {0, 3, EdgeLabel::False},
                                  {3, 4, EdgeLabel::True}},
                                 0};
  EXPECT_TRUE(graph_match::isomorphic(*steps, want)) << graph_match::describe(*steps);
}

TEST(Pipeline, DirectoryRunTotalsAndDeterminism) {
  fixtures::TempDir dir;
  CorpusSpec s;
  s.seed = 9;
  s.n_docs = 10;
  const auto corpus = generate_corpus(s);
  write_corpus(corpus, dir / "pages");

  auto cfg = base(dir);
  cfg.inputs = dir / "pages" / "docs";
  cfg.threads = 1;
  const auto one = run_pipeline(cfg);
  EXPECT_EQ(one.files.size(), 10u);
  EXPECT_EQ(one.lists, corpus.records.size());
  std::size_t procs = 0;
  std::size_t flows = 0;
  for (const auto& f : one.files) {
    procs += f.procedures;
    flows += f.flows.size();
    EXPECT_LE(f.classified, f.lists);
  }
  EXPECT_EQ(one.procedures, procs);
  EXPECT_EQ(one.flows, flows);
  EXPECT_GT(one.procedures, 0u);

  const auto first = read_file(cfg.out / "run_report.json");
  cfg.threads = 4;
  cfg.out = dir / "flows4";
  run_pipeline(cfg);  // reuses the saved model
  EXPECT_EQ(read_file(cfg.out / "run_report.json"), first);
  for (const auto& f : one.files) {
    for (const auto& id : f.flows) {
      EXPECT_EQ(read_file(cfg.out / (id + ".json")), read_file(dir / "flows" / (id + ".json"))) << id;
    }
  }
}

TEST(Pipeline, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorCode::ConfigError), 2);
  EXPECT_EQ(exit_code(ErrorCode::SchemaError), 3);
  EXPECT_EQ(exit_code(ErrorCode::DanglingPath), 3);
  EXPECT_EQ(exit_code(ErrorCode::ModelNotFound), 4);
  EXPECT_EQ(exit_code(ErrorCode::ModelMismatch), 4);
}

TEST(Cli, ExitStatus) {
  fixtures::TempDir dir;
  const auto page = fixtures::path("pages/node_error_561.html");
  EXPECT_EQ(run_cli("ingest " + q(page)), 0);
  EXPECT_EQ(run_cli(""), 2);
  EXPECT_EQ(run_cli("ingest " + q(page) + " --threshold 2"), 2);
  EXPECT_EQ(run_cli("run --config " + q(dir / "missing.json")), 2);
  EXPECT_EQ(run_cli("ingest " + q(dir / "missing.html")), 3);
  EXPECT_EQ(run_cli("extract " + q(page) + " --model " + q(dir / "missing.json")), 4);
}

TEST(Cli, TrainThenRun) {
  fixtures::TempDir dir;
  const auto model = dir / "model.json";
  ASSERT_EQ(run_cli("train --annotations " + q(training_dir() / "annotations.jsonl") + " --wordlist " +
                    q(wordlist()) + " --out " + q(model)),
            0);
  ASSERT_TRUE(std::filesystem::exists(model));
  const auto page = fixtures::path("pages/node_error_561.html");
  ASSERT_EQ(run_cli("run --inputs " + q(page) + " --model " + q(model) + " --out " + q(dir / "flows")), 0);
  const auto report = nlohmann::json::parse(read_file(dir / "flows" / "run_report.json"));
  EXPECT_GE(report.at("totals").at("flows").get<int>(), 1);
}
