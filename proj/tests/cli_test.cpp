#include "formulafind/cli.hpp"
#include "formulafind/corpus.hpp"
#include "formulafind/retrieval.hpp"

#include <unistd.h>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace formulafind;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli_run(args, out, err);
    return {code, out.str(), err.str()};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

class CliPipeline : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        dir_ = fs::temp_directory_path() / ("formulafind_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
        ASSERT_EQ(run({"gen", "--n", "90", "--seed", "4", "--out", path("corpus.jsonl")}).code, 0);
        auto t = run({"train", "--corpus", path("corpus.jsonl"), "--checkpoint", path("model.merm"), "--embed-dim", "8",
                      "--rnn-units", "12", "--max-epochs", "2", "--report", path("report.json")});
        ASSERT_EQ(t.code, 0) << t.err;
        auto e = run({"extract", "--corpus", path("corpus.jsonl"), "--checkpoint", path("model.merm"), "--features",
                      path("features.merf")});
        ASSERT_EQ(e.code, 0) << e.err;
    }
    static void TearDownTestSuite() { fs::remove_all(dir_); }
    static std::string path(const std::string& name) { return (dir_ / name).string(); }

    static fs::path dir_;
};

fs::path CliPipeline::dir_;

} // namespace

TEST(Cli, EncodePrintsSequenceDepthAndLabel) {
    auto r = run({"encode", R"(\sum_{i=a}^b f(i))"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(lines(r.out), (std::vector<std::string>{"102 1000 1004 201 1004 1001 1002 1004 1003 1004 156 1004 157",
                                                      "depth: 1", "label: Medium"}));
}

TEST(Cli, UsageErrorsExitOne) {
    auto none = run({});
    EXPECT_EQ(none.code, kExitUsage);
    EXPECT_NE(none.err.find("Usage"), std::string::npos);
    EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(run({"encode"}).code, kExitUsage);
    EXPECT_EQ(run({"query", "x", "--corpus", "/nonexistent.jsonl"}).code, kExitUsage);
    EXPECT_EQ(run({"bench", "--sizes", "20,10"}).code, kExitUsage);
    EXPECT_EQ(run({"train", "--corpus", "/dev/null", "--checkpoint", "/tmp/x", "--pooling", "median"}).code,
              kExitUsage);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, DataErrorsExitTwo) {
    auto r = run({"encode", R"(a+\nope)"});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("nope"), std::string::npos);
    EXPECT_EQ(run({"encode", "x^"}).code, kExitData);
}

TEST(Cli, GenWritesJsonlToStdout) {
    auto r = run({"gen", "--n", "6", "--seed", "1"});
    ASSERT_EQ(r.code, 0);
    std::istringstream in(r.out);
    EXPECT_EQ(read_jsonl(in).size(), 6u);
}

TEST(Cli, BenchEmitsCsv) {
    auto r = run({"bench", "--sizes", "0,20", "--trials", "1", "--code-length", "10"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto l = lines(r.out);
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[0], "size,semantic_seconds,lcs_seconds");
    EXPECT_EQ(l[2].substr(0, 3), "20,");
}

TEST_F(CliPipeline, ArtifactsLoad) {
    EXPECT_EQ(load_db_file(path("features.merf")).size(), 90u);
    std::ifstream report(path("report.json"));
    EXPECT_TRUE(report.good());
}

TEST_F(CliPipeline, QueryExcludesSelfByDefault) {
    const auto corpus = read_jsonl_file(path("corpus.jsonl"));
    const auto& member = corpus[10];
    for (const std::string method : {"semantic", "lcs"}) {
        auto r = run({"query", member.latex, "--corpus", path("corpus.jsonl"), "--checkpoint", path("model.merm"),
                      "--features", path("features.merf"), "--k", "5", "--method", method});
        ASSERT_EQ(r.code, 0) << r.err;
        auto l = lines(r.out);
        ASSERT_EQ(l.size(), 6u) << r.out;
        for (std::size_t i = 1; i < l.size(); ++i) {
            EXPECT_EQ(l[i].find(member.id), std::string::npos) << l[i];
            if (method == "semantic") {
                const auto score = l[i].substr(l[i].find('\t', l[i].find('\t') + 1) + 1);
                EXPECT_GT(std::stod(score), 0.0);
            }
        }
    }
    auto with_self = run({"query", member.latex, "--corpus", path("corpus.jsonl"), "--checkpoint", path("model.merm"),
                          "--features", path("features.merf"), "--include-self"});
    ASSERT_EQ(with_self.code, 0);
    EXPECT_EQ(lines(with_self.out)[1].substr(0, 2 + member.id.size()), "1\t" + member.id);
}

TEST_F(CliPipeline, SemanticQueryNeedsArtifacts) {
    EXPECT_EQ(run({"query", "x", "--corpus", path("corpus.jsonl")}).code, kExitUsage);
}

TEST_F(CliPipeline, MismatchedFeaturesAreDataError) {
    auto t = run({"train", "--corpus", path("corpus.jsonl"), "--checkpoint", path("other.merm"), "--embed-dim", "8",
                  "--rnn-units", "12", "--max-epochs", "1", "--seed", "3"});
    ASSERT_EQ(t.code, 0);
    auto r = run({"query", "x", "--corpus", path("corpus.jsonl"), "--checkpoint", path("other.merm"), "--features",
                  path("features.merf")});
    EXPECT_EQ(r.code, kExitData);
    EXPECT_NE(r.err.find("checkpoint"), std::string::npos);
}

TEST_F(CliPipeline, InspectWritesCsvAndPgm) {
    auto r = run({"inspect", R"(\sum_{i=a}^b f(i))", "--checkpoint", path("model.merm"), "--pgm", path("h.pgm")});
    ASSERT_EQ(r.code, 0) << r.err;
    auto l = lines(r.out);
    ASSERT_EQ(l.size(), 13u);
    EXPECT_EQ(std::count(l[0].begin(), l[0].end(), ','), 11);
    std::ifstream pgm(path("h.pgm"), std::ios::binary);
    std::string magic, dims;
    std::getline(pgm, magic);
    std::getline(pgm, dims);
    EXPECT_EQ(magic, "P5");
    EXPECT_EQ(dims, "12 13");
}

TEST_F(CliPipeline, SweepPrintsOneRowPerConfig) {
    auto r = run({"sweep", "--corpus", path("corpus.jsonl"), "--configs", "4x6,6x4", "--max-epochs", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    auto l = lines(r.out);
    ASSERT_EQ(l.size(), 3u);
    EXPECT_EQ(l[1].substr(0, 4), "4,6,");
    EXPECT_EQ(l[2].substr(0, 4), "6,4,");
}
