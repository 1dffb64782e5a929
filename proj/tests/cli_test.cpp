// Copyright 2026 The halspan Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "halspan/corpus.hpp"
#include "testing/synthetic.hpp"

namespace halspan {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("halspan-cli-") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const {
    return (dir_ / name).string();
  }
  std::string write_corpus(const std::string& name,
                           const std::vector<RagRecord>& records) {
    save_corpus(records, path(name));
    return path(name);
  }

  fs::path dir_;
};

TEST_F(CliTest, NoSubcommandIsUsageError) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"frobnicate"}).code, cli::kUsage);
}

TEST_F(CliTest, MissingInputIsUsageErrorWithJsonReason) {
  const Result r = run({"build-labels", path("nope.jsonl"), "--out", path("x")});
  EXPECT_EQ(r.code, cli::kUsage);
  const Json j = Json::parse(r.err.substr(r.err.rfind('{')));
  EXPECT_EQ(j["status"], "error");
  EXPECT_EQ(j["exit"], 1);
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, BinaryReturnsExitCodes) {
  const std::string bin = HALSPAN_CLI_PATH;
  int status = std::system((bin + " stats " + path("none.jsonl") +
                            " 2>/dev/null >/dev/null").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), cli::kUsage);
  status = std::system((bin + " --help >/dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(status), cli::kOk);
}

TEST_F(CliTest, IdentityTranslateChangesOnlyLanguage) {
  const auto records = testing::synthetic_corpus(5, 1);
  const std::string in = write_corpus("in.jsonl", records);
  const Result r = run({"translate", in, "--target-lang", "tr", "--backend",
                        "identity", "--out", path("tr.jsonl")});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const Json summary = Json::parse(r.out);
  EXPECT_EQ(summary["status"], "ok");
  EXPECT_EQ(summary["translated"], 5);
  const auto out = load_corpus(path("tr.jsonl"));
  ASSERT_EQ(out.size(), records.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    RagRecord back = out[i];
    EXPECT_EQ(back.language, "tr");
    back.language = "en";
    EXPECT_EQ(back, records[i]);
  }
}

TEST_F(CliTest, TagViolationsArePartialFailure) {
  const std::string in = write_corpus("in.jsonl", testing::synthetic_corpus(8, 2));
  const Result r = run({"translate", in, "--target-lang", "tr", "--backend",
                        "drop-close-tag", "--out", path("tr.jsonl")});
  EXPECT_EQ(r.code, cli::kPartialFailure);
  const std::string failures = slurp(path("tr.jsonl.failures.jsonl"));
  EXPECT_NE(failures.find("\"kind\":\"protocol\""), std::string::npos);
  // Records without spans carry no markers and pass through.
  for (const RagRecord& rec : load_corpus(path("tr.jsonl"))) {
    EXPECT_TRUE(rec.labels.empty());
  }
}

TEST_F(CliTest, UnreachableBackendIsTransportError) {
  const std::string in = write_corpus("in.jsonl", testing::synthetic_corpus(2, 3));
  std::ofstream(path("backend.json"))
      << R"({"endpoint":"http://127.0.0.1:1","model":"m","timeout_seconds":2})";
  const Result r = run({"translate", in, "--target-lang", "tr", "--backend",
                        "http", "--backend-config", path("backend.json"),
                        "--out", path("tr.jsonl")});
  EXPECT_EQ(r.code, cli::kTransport) << r.err;
}

TEST_F(CliTest, OverLongAnswerIsPartialFailure) {
  auto records = testing::synthetic_corpus(3, 4);
  const std::string in = write_corpus("in.jsonl", records);
  const Result r = run({"build-labels", in, "--max-len", "12", "--out",
                        path("labels.jsonl")});
  EXPECT_EQ(r.code, cli::kPartialFailure) << r.err;
  const Json meta = Json::parse(slurp(path("labels.jsonl.meta.json")));
  EXPECT_FALSE(meta["unencodable"].empty());
}

TEST_F(CliTest, TokenizerMismatchIsArtifactError) {
  const std::string in = write_corpus("in.jsonl", testing::synthetic_corpus(6, 5));
  ASSERT_EQ(run({"build-labels", in, "--tokenizer", "word-hash:512", "--out",
                 path("labels.jsonl")})
                .code,
            cli::kOk);
  EXPECT_EQ(run({"train", path("labels.jsonl"), "--model-dir", path("model"),
                 "--tokenizer", "word-hash:1024"})
                .code,
            cli::kArtifactMismatch);
  ASSERT_EQ(run({"train", path("labels.jsonl"), "--model-dir", path("model"),
                 "--epochs", "1", "--hidden-size", "8", "--ffn-size", "8"})
                .code,
            cli::kOk);
  EXPECT_EQ(run({"predict", path("model"), in, "--tokenizer", "word-hash:64",
                 "--out", path("pred.jsonl")})
                .code,
            cli::kArtifactMismatch);
}

TEST_F(CliTest, LabelsWithoutMetaIsArtifactError) {
  std::ofstream(path("labels.jsonl"))
      << R"({"id":"a","input_ids":[1,5,2],"labels":[-100,1,-100]})" << "\n";
  EXPECT_EQ(run({"train", path("labels.jsonl"), "--model-dir", path("m")}).code,
            cli::kArtifactMismatch);
}

TEST_F(CliTest, EvaluateWithMismatchedIdsIsArtifactError) {
  const auto records = testing::synthetic_corpus(4, 6);
  const std::string gold = write_corpus("gold.jsonl", records);
  std::ofstream(path("pred.jsonl"))
      << R"({"id":"stranger","spans":[],"score":0.1,"tokens":[]})" << "\n";
  const Result r = run({"evaluate", gold, path("pred.jsonl"), "--report-dir",
                        path("report")});
  EXPECT_EQ(r.code, cli::kArtifactMismatch);
  EXPECT_NE(r.err.find("stranger"), std::string::npos);
}

TEST_F(CliTest, StatsReportsLengths) {
  const std::string in = write_corpus("in.jsonl", testing::synthetic_corpus(5, 7));
  const Result r = run({"stats", in});
  ASSERT_EQ(r.code, cli::kOk) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_GT(j["mean"].get<double>(), 3.0);
  EXPECT_LE(j["min"].get<double>(), j["median"].get<double>());
}

TEST_F(CliTest, ConfigFileFillsMissingFlags) {
  const std::string in = write_corpus("in.jsonl", testing::synthetic_corpus(3, 8));
  std::ofstream(path("cfg.json"))
      << R"({"tokenizer":"word-hash:300","max-len":4096})";
  ASSERT_EQ(run({"build-labels", in, "--out", path("a.jsonl"), "--config",
                 path("cfg.json")})
                .code,
            cli::kOk);
  EXPECT_EQ(Json::parse(slurp(path("a.jsonl.meta.json")))["tokenizer"],
            "word-hash:300:6");
  // An explicit flag wins over the file.
  ASSERT_EQ(run({"build-labels", in, "--out", path("b.jsonl"), "--tokenizer",
                 "word-hash:400", "--config", path("cfg.json")})
                .code,
            cli::kOk);
  EXPECT_EQ(Json::parse(slurp(path("b.jsonl.meta.json")))["tokenizer"],
            "word-hash:400:6");
}

struct PipelineOutput {
  Json report;
  std::string predictions;
};

PipelineOutput run_pipeline(const fs::path& dir, const std::string& corpus) {
  auto p = [&](const std::string& n) { return (dir / n).string(); };
  EXPECT_EQ(run({"translate", corpus, "--target-lang", "tr", "--backend",
                 "identity", "--parallelism", "4", "--out", p("tr.jsonl")})
                .code,
            cli::kOk);
  EXPECT_EQ(run({"build-labels", p("tr.jsonl"), "--tokenizer", "word-hash:1024",
                 "--out", p("labels.jsonl")})
                .code,
            cli::kOk);
  const Result train = run({"train", p("labels.jsonl"), "--model-dir",
                            p("model"), "--epochs", "15", "--learning-rate",
                            "3e-3", "--hidden-size", "16", "--ffn-size", "32",
                            "--seed", "3"});
  EXPECT_EQ(train.code, cli::kOk) << train.err;
  EXPECT_EQ(run({"predict", p("model"), p("tr.jsonl"), "--out",
                 p("pred.jsonl"), "--threads", "2"})
                .code,
            cli::kOk);
  const Result eval = run({"evaluate", p("tr.jsonl"), p("pred.jsonl"),
                           "--report-dir", p("report")});
  EXPECT_EQ(eval.code, cli::kOk) << eval.err;
  EXPECT_TRUE(fs::exists(dir / "report" / "report.csv"));
  return {Json::parse(slurp(dir / "report" / "report.json")),
          slurp(dir / "pred.jsonl")};
}

TEST_F(CliTest, FullPipelineOverfitsAndIsDeterministic) {
  const std::string corpus =
      write_corpus("corpus.jsonl", testing::synthetic_corpus(45, 9));
  fs::create_directories(dir_ / "a");
  fs::create_directories(dir_ / "b");
  const PipelineOutput a = run_pipeline(dir_ / "a", corpus);
  const PipelineOutput b = run_pipeline(dir_ / "b", corpus);
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_EQ(slurp(dir_ / "a" / "model" / "encoder.bin"),
            slurp(dir_ / "b" / "model" / "encoder.bin"));

  bool found = false;
  for (const Json& r : a.report["reports"]) {
    if (r["level"] == "token" && r["slice"] == "Whole") {
      found = true;
      EXPECT_GE(r["class_1"]["f1"].get<double>(), 0.95);
      EXPECT_EQ(r["model_manifest_version"], "halspan-model/1");
    }
  }
  EXPECT_TRUE(found);

  const Json first = Json::parse(a.predictions.substr(0, a.predictions.find('\n')));
  EXPECT_TRUE(first.contains("spans"));
  EXPECT_TRUE(first.contains("score"));
  const Json meta = Json::parse(slurp(dir_ / "a" / "pred.jsonl.meta.json"));
  EXPECT_EQ(meta["tokenizer"], "word-hash:1024:6");
}

}  // namespace
}  // namespace halspan
