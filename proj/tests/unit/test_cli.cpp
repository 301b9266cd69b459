#include <filesystem>
#include <map>

#include <gtest/gtest.h>

#include "entrank/evaluator.hpp"
#include "support.hpp"

namespace entrank {
namespace {

namespace fs = std::filesystem;
using testing::run_command;

std::string quoted(const fs::path& p) { return "'" + p.string() + "'"; }

// Ten documents, four protest positives marked for the mock backend.
fs::path write_fixture(const testing::TempDir& tmp) {
  std::vector<Document> docs;
  const auto labels = testing::shuffled_labels(10, 4, 21);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Document d;
    d.doc_id = "c" + std::to_string(i);
    d.text = "Item " + std::to_string(i) + " opens here. " +
             (labels[i] ? "Workers PROTEST_MARKER marched." : "Markets closed flat.") + " The day ended.";
    d.labels["protest"] = labels[i];
    docs.push_back(std::move(d));
  }
  const auto path = tmp / "corpus.jsonl";
  export_generic(Corpus("protestnews", {"protest"}, std::move(docs)), path);
  return path;
}

std::string cli(const std::string& args) { return std::string("'") + ENTRANK_CLI_PATH + "' " + args; }

std::string common(const fs::path& corpus, const fs::path& out) {
  return "--dataset-path " + quoted(corpus) + " --dataset-name protestnews --query-type declarative,definitional "
         "--out-dir " + quoted(out);
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = testing::slurp(e.path());
  }
  return files;
}

TEST(Cli, HelpListsSubcommands) {
  const auto r = run_command(cli("--help"));
  EXPECT_EQ(r.exit_code, 0);
  for (const auto* sub : {"score", "rank", "eval", "report", "run", "validate", "stats"}) {
    EXPECT_NE(r.output.find(sub), std::string::npos) << sub;
  }
}

TEST(Cli, OracleRunGivesPerfectAp) {
  testing::TempDir tmp;
  const auto corpus = write_fixture(tmp);
  const auto r = run_command(cli("run --backend oracle " + common(corpus, tmp / "out")));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  EXPECT_NE(r.output.find("oracle"), std::string::npos);
  EXPECT_NE(r.output.find("1.00"), std::string::npos);
  const auto metrics = read_metrics(tmp / "out" / "metrics.tsv");
  ASSERT_EQ(metrics.size(), 2u);
  for (const auto& m : metrics) EXPECT_EQ(m.ap, 1.0);
}

TEST(Cli, CacheReplayIsByteIdenticalWithoutAModel) {
  testing::TempDir tmp;
  const auto corpus = write_fixture(tmp);
  const auto cache = tmp / "scores.jsonl";
  auto r = run_command(cli("run --backend random --backend-id dlm --seed 5 --cache out --cache-file " + quoted(cache) +
                           " " + common(corpus, tmp / "a")));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  ASSERT_TRUE(fs::exists(cache));

  for (const auto* dir : {"b", "c"}) {
    r = run_command("env -u ENTRANK_MODEL_DIR " + cli("run --backend dlm --cache in --cache-file " + quoted(cache) + " " +
                                                      common(corpus, tmp / dir)));
    ASSERT_EQ(r.exit_code, 0) << r.output;
  }
  const auto b = tree(tmp / "b"), c = tree(tmp / "c");
  EXPECT_EQ(b, c);
  EXPECT_TRUE(b.count("metrics.tsv"));
  auto a = tree(tmp / "a");
  for (const auto& [name, contents] : b) EXPECT_EQ(a[name], contents) << name;
}

TEST(Cli, StagesReproduceRun) {
  testing::TempDir tmp;
  const auto corpus = write_fixture(tmp);
  ASSERT_EQ(run_command(cli("run " + common(corpus, tmp / "whole"))).exit_code, 0);
  for (const auto* stage : {"score", "rank", "eval", "report"}) {
    const auto r = run_command(cli(std::string(stage) + " " + common(corpus, tmp / "staged")));
    ASSERT_EQ(r.exit_code, 0) << stage << ": " << r.output;
  }
  auto staged = tree(tmp / "staged");
  // The staged run also keeps its score cache and unit file.
  EXPECT_EQ(staged.erase("scores.jsonl"), 1u);
  EXPECT_EQ(staged.erase("scores.units.jsonl"), 1u);
  EXPECT_EQ(staged, tree(tmp / "whole"));
}

TEST(Cli, ExitCodes) {
  testing::TempDir tmp;
  const auto corpus = write_fixture(tmp);
  // Config errors.
  auto r = run_command(cli("run --backend random " + common(corpus, tmp / "o")));
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_NE(r.output.find("--seed"), std::string::npos);
  r = run_command(cli("run --dataset-path " + quoted(corpus) + " --dataset-name protestnews --query-type rhetorical"));
  EXPECT_EQ(r.exit_code, 1) << r.output;
  EXPECT_NE(r.output.find("rhetorical"), std::string::npos);
  r = run_command(cli("run --no-such-flag"));
  EXPECT_EQ(r.exit_code, 1);

  // Data errors.
  testing::spit(tmp / "bad.jsonl", "{\"doc_id\": \"a\", \"text\": \"x\", \"labels\": {\"protest\": 1}}\nnot json\n");
  r = run_command(cli("run " + common(tmp / "bad.jsonl", tmp / "o")));
  EXPECT_EQ(r.exit_code, 2) << r.output;
  EXPECT_NE(r.output.find("[corpus]"), std::string::npos) << r.output;
  r = run_command(cli("rank " + common(corpus, tmp / "empty")));
  EXPECT_EQ(r.exit_code, 2) << r.output;

  // Backend errors.
  r = run_command(cli("run --backend dlm --model-path " + quoted(tmp / "nowhere") + " " + common(corpus, tmp / "o")));
  EXPECT_EQ(r.exit_code, 3) << r.output;
  EXPECT_NE(r.output.find("nowhere"), std::string::npos);
}

TEST(Cli, NeuralFixtureRun) {
  testing::TempDir tmp;
  const auto corpus = write_fixture(tmp);
  const auto model = testing::fixture_dir() / "nli" / "roberta";
  const auto r = run_command(cli("run --backend rlm --model-path " + quoted(model) + " --workers 2 " +
                                 common(corpus, tmp / "out")));
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const auto metrics = read_metrics(tmp / "out" / "metrics.tsv");
  ASSERT_EQ(metrics.size(), 2u);
  EXPECT_EQ(metrics[0].config.backend_id, "rlm");
  for (const auto& m : metrics) {
    EXPECT_GT(m.ap, 0.0);
    EXPECT_LE(m.ap, 1.0);
  }

  // The model directory also resolves from the environment.
  const auto env = run_command("ENTRANK_MODEL_DIR=" + quoted(testing::fixture_dir() / "nli") + " " +
                               cli("run --backend roberta " + common(corpus, tmp / "env")));
  ASSERT_EQ(env.exit_code, 0) << env.output;
  EXPECT_EQ(read_metrics(tmp / "env" / "metrics.tsv")[0].ap, metrics[0].ap);
}

TEST(Cli, ValidateReports) {
  testing::TempDir tmp;
  const auto corpus = write_fixture(tmp);
  auto r = run_command(cli("validate " + common(corpus, tmp / "out")));
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("ok: 10 documents"), std::string::npos) << r.output;
  EXPECT_NE(r.output.find("configuration is valid"), std::string::npos) << r.output;
  r = run_command(cli("validate --dataset-path " + quoted(corpus) +
                      " --dataset-name protestnews --query-type declarative,rhetorical --out-dir " + quoted(tmp / "o")));
  EXPECT_NE(r.output.find("problem: [queries] unknown query type 'rhetorical'"), std::string::npos) << r.output;
  EXPECT_FALSE(fs::exists(tmp / "o" / "metrics.tsv"));
}

}  // namespace
}  // namespace entrank
