#include "clgen/cli/compare.hpp"
#include "clgen/cli/config.hpp"
#include "clgen/cli/runner.hpp"
#include "clgen/common/error.hpp"

#include "../support/tempdir.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <fstream>
#include <sstream>

namespace {

using namespace clgen;
using namespace clgen::cli;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::string kTinyRun = R"([run]
output = out
fixtures = true
fixture_train = 6
fixture_test = 2
seeds = 3
permutations = 2
vocab_scope = all_domains
min_count = 1
max_len = 40

[model]
num_layers = 1
num_heads = 2
hidden = 8
dropout = 0.0

[generation]
candidates = 2
max_new_tokens = 6

[diagnostics]
rank_every = 2
)";

const std::string kTinyStrategies = R"(
[strategy.finetune]
kind = finetune
epochs = 1
batch_size = 4

[strategy.tm]
kind = tm_bnnm
epochs = 1
batch_size = 4
memory = 2
)";

std::string read(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << text;
}

RunConfig parse(const std::string& text, const fs::path& source = "exp.ini") { return RunConfig::parse(text, source); }

void expect_rejected(const std::string& text, const std::string& fragment) {
    try {
        parse(text);
        FAIL() << "accepted config, expected error containing '" << fragment << "'";
    } catch (const InputError& e) {
        EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
    }
}

int run(const fs::path& config, RunOptions opts = {}, std::string* log = nullptr) {
    std::ostringstream out;
    const int rc = run_experiment(RunConfig::load(config), opts, out);
    if (log)
        *log = out.str();
    return rc;
}

TEST(RunConfigTest, ParsesSectionsAndResolvesPaths) {
    const RunConfig c = parse(kTinyRun + kTinyStrategies, "/exp/configs/a.ini");
    EXPECT_EQ(c.output, fs::path("/exp/configs/out"));
    EXPECT_TRUE(c.fixtures);
    EXPECT_EQ(c.fixture.train_per_domain, 6);
    EXPECT_EQ(c.seeds, std::vector<std::uint64_t>{3});
    EXPECT_EQ(c.permutations, 2);
    EXPECT_EQ(c.vocab_scope, VocabScope::AllDomains);
    EXPECT_EQ(c.model.hidden, 8);
    EXPECT_EQ(c.generation.candidates, 2);
    EXPECT_EQ(c.rank_every, 2);
    ASSERT_EQ(c.strategies.size(), 2u);
    EXPECT_EQ(c.strategies[1].kind, strategy::StrategyKind::TMBNNM);
    EXPECT_EQ(c.strategies[1].memory, 2u);
}

TEST(RunConfigTest, DefaultsFollowMode) {
    const RunConfig c = parse("[run]\noutput = o\nfixtures = yes\nmode = chitchat\n[strategy.r]\nkind = replay\n");
    EXPECT_EQ(c.mode, data::Mode::Chitchat);
    EXPECT_EQ(c.permutations, 5);
    EXPECT_EQ(c.vocab_scope, VocabScope::FirstDomain);
    EXPECT_EQ(c.generation.candidates, 1);
}

TEST(RunConfigTest, RejectsInvalidConfigs) {
    const std::string head = "[run]\noutput = o\nfixtures = true\n";
    const std::string strat = "[strategy.a]\nkind = finetune\n";
    expect_rejected(head + "colour = red\n" + strat, "unknown key");
    expect_rejected(head + strat + "[extras]\nx = 1\n", "unknown section");
    expect_rejected(head + "[strategy.a]\nkind = replay\nkappa = 0.4\n", "does not apply");
    expect_rejected(head, "at least one");
    expect_rejected(head + "seeds = 1, 1\n" + strat, "distinct");
    expect_rejected(head + "seeds = 1, x\n" + strat, "cannot parse");
    expect_rejected(head + "permutations = 0\n" + strat, "permutations");
    expect_rejected("[run]\noutput = o\n" + strat, "exactly one");
    expect_rejected(head + "data = d\n" + strat, "exactly one");
    expect_rejected("[run]\nfixtures = true\n" + strat, "required");
    expect_rejected(head + "vocab_scope = everything\n" + strat, "vocab_scope");
    expect_rejected(head + "[model]\nhidden = 10\nnum_heads = 4\n" + strat, "exp.ini");
    expect_rejected(head + "[diagnostics]\nrank_rel_tol = 2\n" + strat, "rank_rel_tol");
    expect_rejected(head + "[strategy.a]\nlr = 0.1\n", "kind");
}

TEST(RunnerTest, DryRunPlansEveryCellAndTrainsNothing) {
    clgen::testing::TempDir tmp;
    const std::string strategies = R"(
[strategy.Finetune]
kind = finetune
[strategy.Replay]
kind = replay
[strategy.TextMixup]
kind = textmixup
[strategy.TM_BNNM]
kind = tm_bnnm
)";
    write(tmp.path() / "c.ini", "[run]\noutput = out\nfixtures = true\n" + strategies);
    RunOptions opts;
    opts.dry_run = true;
    std::string log;
    EXPECT_EQ(run(tmp.path() / "c.ini", opts, &log), 0);
    EXPECT_NE(log.find("20 cells"), std::string::npos) << log;
    EXPECT_NE(log.find("cells/TM_BNNM/perm4_seed1"), std::string::npos);
    EXPECT_FALSE(fs::exists(tmp.path() / "out"));
}

TEST(RunnerTest, PlanCrossesStrategiesPermutationsAndSeeds) {
    RunConfig c = parse(kTinyRun + kTinyStrategies);
    c.seeds = {1, 2};
    const std::vector<std::string> domains{"a", "b", "c"};
    const auto cells = plan_cells(c, domains);
    ASSERT_EQ(cells.size(), 2u * 2u * 2u);
    for (const auto& cell : cells) {
        auto sorted = cell.order;
        std::sort(sorted.begin(), sorted.end());
        EXPECT_EQ(sorted, domains);
    }
    EXPECT_EQ(cells[0].relative_dir(), fs::path("cells/finetune/perm0_seed1"));
    EXPECT_EQ(cells[0].order, plan_cells(c, domains)[0].order);
}

TEST(RunnerTest, RunWritesArtifactsAndIsDeterministic) {
    clgen::testing::TempDir tmp;
    write(tmp.path() / "c.ini", kTinyRun + kTinyStrategies);
    const fs::path out = tmp.path() / "out";
    ASSERT_EQ(run(tmp.path() / "c.ini"), 0);

    const fs::path cell = out / "cells/tm/perm1_seed3";
    for (const char* f : {"DONE", "report.json", "report.txt", "rank_trace.csv", "loss_log.jsonl",
                          "bleu_by_position.csv", "hypotheses.jsonl", "model.ckpt", "vocab.txt"})
        EXPECT_TRUE(fs::exists(cell / f)) << f;
    EXPECT_EQ(read(cell / "rank_trace.csv").rfind("step,domain,rank\n", 0), 0u);
    EXPECT_NE(read(cell / "loss_log.jsonl").find("\"l_bnnm\":-"), std::string::npos);

    const json results = json::parse(read(out / "results.json"));
    EXPECT_EQ(results["cells"].size(), 4u);
    EXPECT_TRUE(results["aggregate"].contains("finetune"));
    EXPECT_TRUE(results["aggregate"].contains("tm"));
    const std::string first = read(out / "results.json");

    // A rerun skips completed cells; --force recomputes them bit-identically.
    const auto stamp = fs::last_write_time(cell / "DONE");
    std::string log;
    ASSERT_EQ(run(tmp.path() / "c.ini", {}, &log), 0);
    EXPECT_NE(log.find("skipped"), std::string::npos);
    EXPECT_EQ(fs::last_write_time(cell / "DONE"), stamp);
    EXPECT_EQ(read(out / "results.json"), first);

    RunOptions force;
    force.force = true;
    force.parallel = 2;
    ASSERT_EQ(run(tmp.path() / "c.ini", force), 0);
    EXPECT_EQ(read(out / "results.json"), first);
}

TEST(RunnerTest, SeedFlagOverridesSeedList) {
    clgen::testing::TempDir tmp;
    write(tmp.path() / "c.ini", kTinyRun + kTinyStrategies);
    RunOptions opts;
    opts.dry_run = true;
    opts.seed = 42;
    std::string log;
    ASSERT_EQ(run(tmp.path() / "c.ini", opts, &log), 0);
    EXPECT_NE(log.find("perm0_seed42"), std::string::npos);
    EXPECT_EQ(log.find("seed3"), std::string::npos);
}

TEST(RunnerTest, FailedCellsAreMarkedAndPartialResultsKept) {
    clgen::testing::TempDir tmp;
    const std::string train =
        R"j({"domain":"a","input":"inform(x=1)","output":"x is 1 ."})j"
        "\n"
        R"j({"domain":"b","input":"inform(y=2)","output":"y is 2 ."})j"
        "\n";
    const std::string test =
        R"j({"domain":"a","input":"inform(x=1)","output":"x is 1 ."})j"
        "\n"
        R"j({"domain":"b","input":"inform(y=2)","output":""})j"
        "\n";
    write(tmp.path() / "data/train.jsonl", train);
    write(tmp.path() / "data/test.jsonl", test);
    std::string cfg = kTinyRun + "[strategy.finetune]\nkind = finetune\nepochs = 1\n";
    cfg.replace(cfg.find("fixtures = true"), 15, "data = data");
    write(tmp.path() / "c.ini", cfg);

    EXPECT_EQ(run(tmp.path() / "c.ini"), 1);
    const fs::path cell = tmp.path() / "out/cells/finetune/perm0_seed3";
    EXPECT_TRUE(fs::exists(cell / "FAILED"));
    EXPECT_FALSE(fs::exists(cell / "DONE"));
    EXPECT_TRUE(fs::exists(cell / "loss_log.jsonl"));
    EXPECT_TRUE(fs::exists(cell / "model.ckpt"));
    const json results = json::parse(read(tmp.path() / "out/results.json"));
    for (const auto& c : results["cells"])
        EXPECT_EQ(c["status"], "failed");
    EXPECT_TRUE(results["aggregate"].empty());
}

TEST(RunnerTest, MissingDataFailsBeforeTraining) {
    clgen::testing::TempDir tmp;
    std::string cfg = kTinyRun + kTinyStrategies;
    cfg.replace(cfg.find("fixtures = true"), 15, "data = nowhere");
    write(tmp.path() / "c.ini", cfg);
    EXPECT_THROW(run(tmp.path() / "c.ini"), InputError);
    EXPECT_FALSE(fs::exists(tmp.path() / "out/cells"));
}

json aggregate_entry(double bleu, double ter) {
    return {{"macro", {{"bleu", bleu}, {"ter", ter}, {"distinct", {0.1, 0.2, 0.3, 0.4}}, {"err", 0.5}}}};
}

TEST(CompareTest, JoinsOnStrategyWithGapsAndBestMarkers) {
    clgen::testing::TempDir tmp;
    write(tmp.path() / "a/results.json",
          json{{"aggregate", {{"Replay", aggregate_entry(20, 0.5)}, {"TM_BNNM", aggregate_entry(25, 0.6)}}}}.dump());
    json b_tm = aggregate_entry(10, 0.4);
    b_tm["macro"].erase("ter");
    write(tmp.path() / "b/results.json",
          json{{"aggregate", {{"TM_BNNM", b_tm}, {"Finetune", aggregate_entry(5, 0.9)}}}}.dump());

    const Comparison c = compare_results({tmp.path() / "a", tmp.path() / "b"});
    EXPECT_EQ(c.strategies, (std::vector<std::string>{"Replay", "TM_BNNM", "Finetune"}));
    ASSERT_EQ(c.sources.size(), 2u);
    const std::size_t bleu = 0, ter = 1;
    EXPECT_FALSE(c.values[0][1][bleu].has_value());
    EXPECT_FALSE(c.values[1][1][ter].has_value());
    EXPECT_TRUE(c.is_best(1, 0, bleu));
    EXPECT_TRUE(c.is_best(0, 0, ter));
    EXPECT_TRUE(c.is_best(1, 1, bleu));
    EXPECT_TRUE(c.is_best(2, 1, ter));

    const json j = c.to_json();
    EXPECT_EQ(j["rows"].size(), 3u);
    EXPECT_EQ(j["rows"][0]["columns"].size(), 2u);
    EXPECT_TRUE(j["rows"][0]["columns"][1]["bleu"]["value"].is_null());
    EXPECT_TRUE(j["rows"][1]["columns"][0]["bleu"]["best"].get<bool>());
    const std::string text = c.to_text();
    EXPECT_NE(text.find("25.0000*"), std::string::npos) << text;
    EXPECT_NE(text.find(" -"), std::string::npos);
}

TEST(CompareTest, SingleDirectoryPassesValuesThrough) {
    clgen::testing::TempDir tmp;
    write(tmp.path() / "a/results.json", json{{"aggregate", {{"Replay", aggregate_entry(20, 0.5)}}}}.dump());
    const Comparison c = compare_results({tmp.path() / "a"});
    ASSERT_EQ(c.strategies.size(), 1u);
    EXPECT_EQ(*c.values[0][0][0], 20.0);
    EXPECT_EQ(*c.values[0][0][1], 0.5);
    EXPECT_EQ(*c.values[0][0][5], 0.4);
}

TEST(CompareTest, MissingResultsFileIsAnError) {
    clgen::testing::TempDir tmp;
    EXPECT_THROW(compare_results({tmp.path()}), InputError);
    EXPECT_THROW(compare_results({}), InputError);
}

} // namespace
