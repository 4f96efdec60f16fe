#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <unistd.h>

#include "revsent/eval.hpp"
#include "revsent/io.hpp"
#include "revsent_cli/app.hpp"
#include "synthetic.hpp"

namespace revsent::cli {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kBaseConfig =
    "seed: 5\n"
    "output_dir: out\n"
    "datasets:\n"
    "  - name: synth\n"
    "    path: reviews.csv\n"
    "    schema: {id: review_id, text: review_text, rating: rating}\n"
    "preprocess: {tail_fraction: 0.05, domain_corpus_n: 800, experimental_n: 400}\n"
    "classifiers: [lr]\n"
    "eval: {k: 3, featurizers: [bow], baseline_featurizers: [tfidf], sample_n: 30, repeats: 2}\n";

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("revsent_cli_" + std::to_string(::getpid()) + "_" +
                                       ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
    write_file_atomic(dir / "reviews.csv", testing::synthetic_ratings_csv({.n = 1500, .seed = 31}, 10));
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string write_config(std::string_view labeler = "labeler: {mode: mock, bootstrap_size: 40}\n",
                           std::string_view extra = "") {
    const auto path = dir / "config.yaml";
    write_file_atomic(path, std::string(kBaseConfig) + std::string(labeler) + std::string(extra));
    return path.string();
  }

  int run(std::vector<std::string> args, const EnvLookup& env = [](const std::string&) {
    return std::optional<std::string>();
  }) {
    out.str("");
    err.str("");
    return run_cli(args, out, err, env);
  }

  fs::path dir;
  std::ostringstream out;
  std::ostringstream err;
};

TEST_F(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(run({"--help"}), kExitOk);
  EXPECT_NE(out.str().find("full-run"), std::string::npos);
  EXPECT_EQ(run({"--config", write_config()}), kExitConfig);  // no subcommand
  EXPECT_EQ(run({"--config", write_config(), "frobnicate"}), kExitConfig);
  EXPECT_EQ(run({"prepare"}), kExitConfig);  // --config is required
}

TEST_F(Cli, MissingInputFileIsIoError) {
  const auto config = write_config();
  fs::remove(dir / "reviews.csv");
  EXPECT_EQ(run({"--config", config, "prepare"}), kExitIo);
  EXPECT_NE(err.str().find("reviews.csv"), std::string::npos) << err.str();
  EXPECT_EQ(run({"--config", (dir / "absent.yaml").string(), "prepare"}), kExitIo);
}

TEST_F(Cli, ConfigProblemsExitThree) {
  EXPECT_EQ(run({"--config", write_config("labeler: {mode: mock}\n", "eval_extra: 1\n"), "prepare"}), kExitConfig);
  EXPECT_NE(err.str().find("eval_extra"), std::string::npos);
  write_file_atomic(dir / "config.yaml", std::string(kBaseConfig).replace(kBaseConfig.find("k: 3"), 4, "k: 1") +
                                             "labeler: {mode: mock}\n");
  EXPECT_EQ(run({"--config", (dir / "config.yaml").string(), "prepare"}), kExitConfig);
}

TEST_F(Cli, MissingApiKeyFailsBeforeAnyWork) {
  const auto config = write_config(
      "labeler: {mode: escs, endpoint: 'http://127.0.0.1:9/v1/chat/completions', api_key_env: REVSENT_TEST_NO_KEY}\n");
  EXPECT_EQ(run({"--config", config, "full-run"}), kExitConfig);
  EXPECT_NE(err.str().find("REVSENT_TEST_NO_KEY"), std::string::npos) << err.str();
  EXPECT_FALSE(fs::exists(dir / "out" / "synth" / "experimental.jsonl"));
}

TEST_F(Cli, EvaluateBeforePrepareIsIoError) {
  EXPECT_EQ(run({"--config", write_config(), "evaluate"}), kExitIo);
  EXPECT_NE(err.str().find("prepare"), std::string::npos);
}

TEST_F(Cli, PrepareIsByteIdenticalOnRerun) {
  const auto config = write_config();
  ASSERT_EQ(run({"--config", config, "prepare"}), kExitOk) << err.str();
  const auto exp = read_file(dir / "out" / "synth" / "experimental.jsonl");
  const auto dom = read_file(dir / "out" / "synth" / "domain_corpus.jsonl");
  EXPECT_EQ(parse_jsonl(exp).size(), 400u);
  EXPECT_EQ(parse_jsonl(dom).size(), 800u);
  EXPECT_TRUE(fs::exists(dir / "out" / "synth" / "stats" / "experimental_length_histogram.csv"));
  EXPECT_TRUE(fs::exists(dir / "out" / "synth" / "prepare.json"));
  ASSERT_EQ(run({"--config", config, "prepare"}), kExitOk);
  EXPECT_EQ(read_file(dir / "out" / "synth" / "experimental.jsonl"), exp);
  EXPECT_EQ(read_file(dir / "out" / "synth" / "domain_corpus.jsonl"), dom);
  ASSERT_EQ(run({"--config", config, "--seed", "6", "prepare"}), kExitOk);
  EXPECT_NE(read_file(dir / "out" / "synth" / "experimental.jsonl"), exp);
}

TEST_F(Cli, StatsWritesTables) {
  const auto config = write_config();
  ASSERT_EQ(run({"--config", config, "prepare"}), kExitOk);
  ASSERT_EQ(run({"--config", config, "stats"}), kExitOk) << err.str();
  const auto table = parse_csv(read_file(dir / "out" / "corpus_stats.csv"));
  EXPECT_FALSE(table.rows.empty());
  EXPECT_NE(out.str().find("synth"), std::string::npos);
}

TEST_F(Cli, MockBootstrapDeterministic) {
  const auto config = write_config();
  ASSERT_EQ(run({"--config", config, "prepare"}), kExitOk);
  ASSERT_EQ(run({"--config", config, "--mock", "bootstrap"}), kExitOk) << err.str();
  const auto first = read_file(dir / "out" / "synth" / "bootstrap.jsonl");
  EXPECT_EQ(parse_jsonl(first).size(), 40u);
  EXPECT_TRUE(fs::exists(dir / "out" / "synth" / "bootstrap.transcript.jsonl"));
  ASSERT_EQ(run({"--config", config, "--mock", "bootstrap"}), kExitOk);
  EXPECT_EQ(read_file(dir / "out" / "synth" / "bootstrap.jsonl"), first);
}

TEST_F(Cli, MockFlagOverridesChatLabeler) {
  const auto config = write_config("labeler: {mode: escs, api_key_env: REVSENT_TEST_NO_KEY, bootstrap_size: 40}\n");
  ASSERT_EQ(run({"--config", config, "prepare"}), kExitOk);
  EXPECT_EQ(run({"--config", config, "bootstrap"}), kExitConfig);
  EXPECT_EQ(run({"--config", config, "--mock", "bootstrap"}), kExitOk) << err.str();
}

TEST_F(Cli, LiveBootstrapAgainstLocalChatServer) {
  httplib::Server server;
  std::string authorization;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    authorization = req.get_header_value("Authorization");
    const auto body = Json::parse(req.body);
    const std::string content = body["messages"][1]["content"];
    const auto records = parse_jsonl(std::string_view(content).substr(content.find("reviews.jsonl):\n") + 16));
    std::string reply = "Selected reviews:\n";
    for (std::size_t i = 0; i < 40; ++i) reply += records[i]["id"].get<std::string>() + "," + std::to_string(i % 2) + "\n";
    res.set_content(Json{{"choices", {{{"message", {{"role", "assistant"}, {"content", reply}}}}}}}.dump(),
                    "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const auto config = write_config("labeler: {mode: escs, endpoint: 'http://127.0.0.1:" + std::to_string(port) +
                                   "/v1/chat/completions', api_key_env: REVSENT_TEST_KEY, bootstrap_size: 40}\n");
  const EnvLookup env = [](const std::string& name) {
    return name == "REVSENT_TEST_KEY" ? std::optional<std::string>("sk-local") : std::nullopt;
  };
  ASSERT_EQ(run({"--config", config, "prepare"}, env), kExitOk);
  const int code = run({"--config", config, "bootstrap"}, env);
  server.stop();
  thread.join();
  ASSERT_EQ(code, kExitOk) << err.str();
  EXPECT_EQ(authorization, "Bearer sk-local");
  EXPECT_EQ(parse_jsonl(read_file(dir / "out" / "synth" / "bootstrap.jsonl")).size(), 40u);
  const auto transcript = parse_jsonl(read_file(dir / "out" / "synth" / "bootstrap.transcript.jsonl"));
  ASSERT_EQ(transcript.size(), 1u);
  EXPECT_NE(transcript[0]["response"].get<std::string>().find("Selected reviews"), std::string::npos);
  EXPECT_EQ(read_file(config).find("sk-local"), std::string::npos);
}

TEST_F(Cli, ChatEndpointDownIsStageFailure) {
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  const auto config = write_config("labeler: {mode: escs, endpoint: 'http://127.0.0.1:" + std::to_string(port) +
                                   "/v1', api_key_env: K, bootstrap_size: 40, max_retries: 1, timeout_s: 2}\n");
  const EnvLookup env = [](const std::string&) { return std::optional<std::string>("x"); };
  ASSERT_EQ(run({"--config", config, "prepare"}, env), kExitOk);
  EXPECT_EQ(run({"--config", config, "bootstrap"}, env), kExitStage);
}

TEST_F(Cli, EvaluateAndBaselinesReproducible) {
  const auto config = write_config();
  ASSERT_EQ(run({"--config", config, "prepare"}), kExitOk);
  ASSERT_EQ(run({"--config", config, "--jobs", "2", "evaluate"}), kExitOk) << err.str();
  const fs::path eval = dir / "out" / "evaluation";
  for (const char* name : {"records.jsonl", "report.md", "report.csv", "performance.md", "performance.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(eval / name)) << name;
  }
  EXPECT_TRUE(fs::exists(eval / "bootstrap" / "synth" / "fold0.jsonl"));
  EXPECT_EQ(records_from_jsonl(read_file(eval / "records.jsonl")).records.size(), 3u);
  const auto manifest = Json::parse(read_file(eval / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 5);
  const auto perf_md = read_file(eval / "performance.md");
  const auto perf_csv = read_file(eval / "performance.csv");
  EXPECT_NE(perf_md.find("MOCK+BoW +LR"), std::string::npos);

  ASSERT_EQ(run({"--config", config, "--jobs", "1", "evaluate"}), kExitOk);
  EXPECT_EQ(read_file(eval / "performance.md"), perf_md);
  EXPECT_EQ(read_file(eval / "performance.csv"), perf_csv);

  ASSERT_EQ(run({"--config", config, "baselines"}), kExitOk) << err.str();
  const auto baselines = records_from_jsonl(read_file(dir / "out" / "baselines" / "records.jsonl"));
  EXPECT_EQ(baselines.records.size(), 6u);  // 3 folds x 2 repeats x 1 pipeline
  EXPECT_NE(read_file(dir / "out" / "baselines" / "report.md").find("TFIDF-LR"), std::string::npos);
}

TEST_F(Cli, OutputDirOverride) {
  const auto config = write_config();
  ASSERT_EQ(run({"--config", config, "--output-dir", (dir / "elsewhere").string(), "prepare"}), kExitOk);
  EXPECT_TRUE(fs::exists(dir / "elsewhere" / "synth" / "experimental.jsonl"));
  EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST_F(Cli, FullRunMock) {
  const auto config = write_config();
  ASSERT_EQ(run({"--config", config, "--mock", "full-run"}), kExitOk) << err.str();
  EXPECT_TRUE(fs::exists(dir / "out" / "synth" / "bootstrap.jsonl"));
  EXPECT_TRUE(fs::exists(dir / "out" / "evaluation" / "report.md"));
  EXPECT_TRUE(fs::exists(dir / "out" / "baselines" / "report.md"));
}

TEST_F(Cli, BaselineSampleTooLargeIsStageFailure) {
  const auto config = write_config("labeler: {mode: mock, bootstrap_size: 40}\n");
  auto text = read_file(config);
  text.replace(text.find("sample_n: 30"), 12, "sample_n: 999");
  write_file_atomic(config, text);
  ASSERT_EQ(run({"--config", config, "prepare"}), kExitOk);
  EXPECT_EQ(run({"--config", config, "baselines"}), kExitStage);
  EXPECT_NE(err.str().find("sample_n 999"), std::string::npos) << err.str();
}

}  // namespace
}  // namespace revsent::cli
