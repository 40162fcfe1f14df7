// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "lsynth/coco.hpp"
#include "lsynth/error.hpp"
#include "lsynth/pipeline.hpp"
#include "lsynth/text.hpp"
#include "test_util.hpp"

namespace lsynth {
namespace {

namespace fs = std::filesystem;

const std::string kStats = LSYNTH_TEST_DATA "/../configs/example_stats.tsv";

// A simulator detector that stops after `lines` requests. `read` and `echo`
// are builtins, so nothing is buffered between them.
std::string dying_detector(int lines, const std::string& name) {
    return "i=0; while [ $i -lt " + std::to_string(lines) + " ] && read -r l; do echo \"$l\"; i=$((i+1)); done | " +
           testutil::cli() + " serve-sim detector name=" + name;
}

// Keys in `extra` replace the base ones.
std::string sim_config(const std::string& output, const std::string& extra = {}) {
    const std::vector<std::pair<std::string, std::string>> base{
        {"stats", kStats},
        {"categories", "dog, person, car"},
        {"generator", "sim:generator"},
        {"detector", "sim:detector name=a miss_rate=0"},
        {"detector", "sim:detector name=b miss_rate=0"},
        {"scorer", "sim:scorer min=0 max=10"},
        {"images", "10"},
        {"instances", "1-4"},
        {"seed", "7"},
        {"image_width", "64"},
        {"image_height", "64"},
        {"output", output}};
    std::string text;
    for (const auto& [key, value] : base) {
        if (extra.find(key + " =") == std::string::npos) text += key + " = " + value + "\n";
    }
    return text + extra;
}

int run_cli(const std::string& args) {
    const int rc = std::system((testutil::cli() + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

TEST(ConfigTest, ParsesKeys) {
    const auto c = parse_config(sim_config("out", "k = 3\nscore_mode = quality\nparallelism = 2\nformats = bbox\n"
                                                  "refiner = 0\nstyle_boundary = 30\n"),
                                "/base");
    EXPECT_EQ(c.categories, (std::vector<std::string>{"dog", "person", "car"}));
    EXPECT_EQ(c.detectors.size(), 2u);
    EXPECT_EQ(c.candidates, 3);
    EXPECT_EQ(c.score_mode, ScoreMode::Quality);
    EXPECT_EQ(c.parallelism, 2);
    EXPECT_EQ(c.instances_min, 1);
    EXPECT_EQ(c.instances_max, 4);
    EXPECT_EQ(c.master_seed, 7u);
    EXPECT_EQ(c.output_dir, fs::path("/base/out"));
    EXPECT_EQ(c.refiner_index(), 0u);
    EXPECT_FALSE(c.proposer);
}

TEST(ConfigTest, Defaults) {
    const auto c = parse_config(sim_config("out"));
    EXPECT_EQ(c.candidates, 4);
    EXPECT_EQ(c.score_mode, ScoreMode::Both);
    EXPECT_EQ(c.refiner_index(), 1u);
    EXPECT_EQ(c.max_regenerations, 1);
    EXPECT_EQ(c.formats, std::set<AnnotationFormat>{AnnotationFormat::Bbox});
}

TEST(ConfigTest, Errors) {
    EXPECT_THROW(parse_config(sim_config("o", "colour = red\n")), ConfigError);
    EXPECT_THROW(parse_config("seed = 8\nseed = 9\n"), ConfigError);
    EXPECT_THROW(parse_config(sim_config("o", "k = many\n")), ConfigError);
    EXPECT_THROW(parse_config(sim_config("o", "instances = 4-1\n")).validate(), ConfigError);
    EXPECT_THROW(parse_config(sim_config("o", "k = 0\n")).validate(), ConfigError);
    EXPECT_THROW(parse_config(sim_config("o", "score_mode = median\n")), ConfigError);
    EXPECT_THROW(parse_config(sim_config("o", "refiner = 5\n")).validate(), ConfigError);
    EXPECT_THROW(parse_config("categories = \ngenerator = x\n").validate(), ConfigError);
    EXPECT_THROW(parse_config("just a line\n"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/x.conf"), ConfigError);
}

TEST(SampleRequestTest, UniformCounts) {
    auto c = parse_config(sim_config("o"));
    c.images = 10000;
    std::map<std::size_t, int> freq;
    std::map<std::string, int> cats;
    for (std::size_t i = 0; i < 10000; ++i) {
        const auto r = sample_request(c, i);
        std::size_t n = 0;
        for (const auto& cc : r.categories) {
            n += static_cast<std::size_t>(cc.count);
            cats[cc.name] += cc.count;
        }
        ++freq[n];
    }
    ASSERT_EQ(freq.size(), 4u);
    for (const auto& [n, f] : freq) {
        EXPECT_GE(n, 1u);
        EXPECT_LE(n, 4u);
        EXPECT_NEAR(f / 10000.0, 0.25, 0.02) << n;
    }
    int total = 0;
    for (const auto& [_, f] : cats) total += f;
    for (const auto& [cate, f] : cats) EXPECT_NEAR(static_cast<double>(f) / total, 1.0 / 3.0, 0.02) << cate;
}

TEST(SampleRequestTest, FixedRangeAndDeterminism) {
    auto c = parse_config(sim_config("o", "instances = 2-2\n"));
    for (std::size_t i = 0; i < 200; ++i) {
        int n = 0;
        for (const auto& cc : sample_request(c, i).categories) n += cc.count;
        EXPECT_EQ(n, 2);
    }
    EXPECT_EQ(sample_request(c, 3), sample_request(c, 3));
    auto other = c;
    other.master_seed = 8;
    bool differs = false;
    for (std::size_t i = 0; i < 20; ++i) differs |= !(sample_request(c, i) == sample_request(other, i));
    EXPECT_TRUE(differs);
}

TEST(PipelineRunTest, PerfectDetectorsEmitEverything) {
    testutil::TempDir dir("run");
    const auto c = parse_config(sim_config(dir / "out"));
    const auto r = run_pipeline(c);
    EXPECT_FALSE(r.partial);
    EXPECT_EQ(r.attempted, 10u);
    EXPECT_EQ(r.emitted, 10u);
    EXPECT_EQ(r.abandoned, 0u);
    EXPECT_EQ(r.candidate_attempts, 40u);
    ASSERT_EQ(r.images.size(), 10u);
    for (std::size_t i = 0; i < 10; ++i) {
        EXPECT_EQ(r.images[i].index, i);
        EXPECT_TRUE(fs::exists(c.output_dir / r.images[i].image_file));
        EXPECT_TRUE(r.images[i].selected);
    }
    EXPECT_TRUE(fs::exists(c.output_dir / "report.json"));
    EXPECT_TRUE(fs::exists(c.output_dir / "annotations" / "coco.json"));
    EXPECT_TRUE(fs::exists(c.output_dir / "annotations" / "yolo" / "classes.txt"));
    EXPECT_TRUE(fs::exists(c.output_dir / "layouts" / "000000.json"));
    EXPECT_FALSE(fs::exists(c.output_dir / ".scratch"));
    EXPECT_TRUE(coco::check(read_file(c.output_dir / "annotations" / "coco.json")).empty());
}

TEST(PipelineRunTest, BlindDetectorsAbandonEverything) {
    testutil::TempDir dir("blind");
    auto blind = parse_config(sim_config(dir / "out", "k = 3\nmax_regenerations = 2\n"));
    blind.detectors = {"sim:detector name=a miss_rate=1", "sim:detector name=b miss_rate=1"};
    const auto r = run_pipeline(blind);
    EXPECT_FALSE(r.partial);
    EXPECT_EQ(r.emitted, 0u);
    EXPECT_EQ(r.abandoned, 10u);
    EXPECT_EQ(r.candidate_attempts, 10u * 3u * 3u);
    for (const auto& im : r.images) {
        EXPECT_EQ(im.regenerations, 2);
        EXPECT_FALSE(im.selected);
    }
    EXPECT_TRUE(fs::is_empty(blind.output_dir / "images"));
}

TEST(PipelineRunTest, ReportArithmetic) {
    testutil::TempDir dir("arith");
    auto c = parse_config(sim_config(dir / "out", "k = 2\nimages = 30\n"));
    c.detectors = {"sim:detector name=a miss_rate=0.5", "sim:detector name=b miss_rate=0.5"};
    const auto r = run_pipeline(c);
    EXPECT_EQ(r.attempted, r.emitted + r.abandoned);
    std::size_t attempts = 0;
    for (const auto& im : r.images) {
        attempts += im.attempted_candidates;
        EXPECT_EQ(im.attempted_candidates, static_cast<std::size_t>(im.regenerations + 1) * 2u);
        EXPECT_LE(im.accepted_candidates, im.attempted_candidates);
        EXPECT_EQ(im.emitted, im.selected.has_value());
    }
    EXPECT_EQ(attempts, r.candidate_attempts);
    const auto j = nlohmann::json::parse(read_file(c.output_dir / "report.json"));
    EXPECT_EQ(j["attempted"], r.attempted);
    EXPECT_EQ(j["emitted"], r.emitted);
    EXPECT_EQ(j["abandoned"], r.abandoned);
    EXPECT_FALSE(j.contains("wall_seconds"));
}

TEST(PipelineRunTest, ParallelismDoesNotChangeOutput) {
    testutil::TempDir dir("par");
    auto c = parse_config(sim_config(dir / "one", "images = 12\n"));
    c.detectors = {"sim:detector name=a miss_rate=0.3 jitter=0.01", "sim:detector name=b miss_rate=0.3 jitter=0.01"};
    c.generator = "sim:generator noise=0.02";
    run_pipeline(c);
    auto p = c;
    p.output_dir = dir / "many";
    p.parallelism = 4;
    run_pipeline(p);
    for (const auto& e : fs::recursive_directory_iterator(c.output_dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), c.output_dir);
        ASSERT_TRUE(fs::exists(p.output_dir / rel)) << rel;
        EXPECT_EQ(read_file(e.path()), read_file(p.output_dir / rel)) << rel;
    }
}

TEST(PipelineRunTest, BackendCrashGivesPartialReport) {
    testutil::TempDir dir("crash");
    auto c = parse_config(sim_config(dir / "out", "images = 20\ntimeout_s = 5\n"));
    // The detector process sees only its first 12 requests, then exits.
    c.detectors[0] = dying_detector(12, "a");
    const auto r = run_pipeline(c);
    EXPECT_TRUE(r.partial);
    EXPECT_FALSE(r.abort_reason.empty());
    EXPECT_LT(r.attempted, 20u);
    const auto j = nlohmann::json::parse(read_file(c.output_dir / "report.json"));
    EXPECT_TRUE(j["partial"].get<bool>());
    EXPECT_TRUE(j.contains("abort_reason"));
}

TEST(PipelineRunTest, NonBboxFormatsRejectedAtStartup) {
    testutil::TempDir dir("fmt");
    const auto c = parse_config(sim_config(dir / "out", "formats = bbox, global_caption\n"));
    EXPECT_THROW(run_pipeline(c), ConfigError);
    EXPECT_THROW(validate_setup(c), ConfigError);
}

TEST(ValidateSetupTest, ChecksBackends) {
    testutil::TempDir dir("val");
    const auto ok = parse_config(sim_config(dir / "out"));
    EXPECT_NO_THROW(validate_setup(ok));
    EXPECT_FALSE(fs::exists(ok.output_dir / "images"));
    auto wrong_role = ok;
    wrong_role.scorer = "sim:detector";
    EXPECT_THROW(validate_setup(wrong_role), ConfigError);
    auto same_names = ok;
    same_names.detectors = {"sim:detector name=a", "sim:detector name=a"};
    EXPECT_THROW(validate_setup(same_names), ConfigError);
    auto missing_stats = ok;
    missing_stats.stats_path = dir / "none.tsv";
    EXPECT_THROW(validate_setup(missing_stats), Error);
    auto dead = ok;
    dead.generator = "true";
    EXPECT_THROW(validate_setup(dead), BackendError);
}

TEST(CliTest, PipelineExitCodes) {
    testutil::TempDir dir("cli");
    write_file_atomic(dir / "ok.conf", sim_config(dir / "ok"));
    EXPECT_EQ(run_cli("validate --config " + (dir / "ok.conf")), 0);
    EXPECT_EQ(run_cli("pipeline run --config " + (dir / "ok.conf")), 0);
    EXPECT_TRUE(fs::exists(dir.path() / "ok" / "report.json"));
    EXPECT_EQ(run_cli("coco-check " + (dir.path() / "ok" / "annotations" / "coco.json").string()), 0);

    write_file_atomic(dir / "crash.conf",
                      sim_config(dir / "crash", "images = 20\ntimeout_s = 5\ndetector = " + dying_detector(12, "c") +
                                                    "\ndetector = sim:detector name=d\n"));
    EXPECT_EQ(run_cli("pipeline run --config " + (dir / "crash.conf")), 2);

    write_file_atomic(dir / "bad.conf", "colour = red\n");
    EXPECT_EQ(run_cli("pipeline run --config " + (dir / "bad.conf")), 1);
    EXPECT_EQ(run_cli("validate --config " + (dir / "bad.conf")), 1);
}

TEST(CliTest, StatsAndLayout) {
    testutil::TempDir dir("cli2");
    EXPECT_EQ(run_cli("stats fit --annotations " LSYNTH_TEST_DATA "/data/coco_fixture_50.json --out " +
                      (dir / "s.tsv")),
              0);
    ASSERT_TRUE(fs::exists(dir / "s.tsv"));
    write_file_atomic(dir / "req.json",
               R"({"categories":[{"name":"dog","count":2},{"name":"person","count":1}],"seed":5})");
    EXPECT_EQ(run_cli("layout gen --request " + (dir / "req.json") + " --stats " + (dir / "s.tsv") +
                      " --seed 3 --out " + (dir / "l.json")),
              0);
    const auto a = read_file(dir / "l.json");
    EXPECT_EQ(run_cli("layout gen --request " + (dir / "req.json") + " --stats " + (dir / "s.tsv") +
                      " --seed 3 --out " + (dir / "l2.json")),
              0);
    EXPECT_EQ(a, read_file(dir / "l2.json"));
    EXPECT_EQ(nlohmann::json::parse(a)["instances"].size(), 3u);
    EXPECT_EQ(run_cli("stats fit --annotations /nonexistent.json --out " + (dir / "x.tsv")), 1);
}

}  // namespace
}  // namespace lsynth
