// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lsynth/error.hpp"
#include "lsynth/schedule.hpp"
#include "lsynth/simulators.hpp"
#include "lsynth/text.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace lsynth::sim {
namespace {

protocol::GenerationRequest gen_request(const std::string& out, std::uint64_t seed) {
    protocol::GenerationRequest r;
    r.layout.scene = "s";
    r.layout.instances.push_back({0, "dog", "", "dog", BBox(0.1, 0.5, 0.45, 0.9), std::nullopt});
    r.layout.instances.push_back({1, "person", "", "person", BBox(0.55, 0.2, 0.85, 0.95), std::nullopt});
    r.layout.instances.push_back({2, "dog", "", "dog", BBox(0.3, 0.1, 0.5, 0.3), std::nullopt});
    r.seed = seed;
    r.style_schedule = expand(StyleSchedule{});
    r.output_path = out;
    r.width = 200;
    r.height = 160;
    return r;
}

std::vector<Placement> placements(int n) {
    std::vector<Placement> out;
    for (int i = 0; i < n; ++i) {
        const double x = 0.1 + 0.5 * ((i * 37) % 100) / 100.0;
        const double y = 0.1 + 0.5 * ((i * 53) % 100) / 100.0;
        out.push_back({i, i % 2 ? "dog" : "cat", BBox(x, y, x + 0.3, y + 0.3)});
    }
    return out;
}

TEST(PpmTest, RoundTrip) {
    RgbImage im(3, 2);
    for (std::size_t i = 0; i < im.pixels.size(); ++i) im.pixels[i] = static_cast<std::uint8_t>(i * 11);
    const auto bytes = encode_ppm(im);
    EXPECT_EQ(bytes.substr(0, 2), "P6");
    const auto back = decode_ppm(bytes);
    EXPECT_EQ(back.width, 3);
    EXPECT_EQ(back.height, 2);
    EXPECT_EQ(back.pixels, im.pixels);
    EXPECT_THROW(decode_ppm("P3\n1 1\n255\n0 0 0"), Error);
    EXPECT_THROW(decode_ppm(bytes.substr(0, bytes.size() - 1)), Error);
}

TEST(SimGenerateTest, NoiselessPassThrough) {
    testutil::TempDir dir("gen");
    const auto req = gen_request(dir / "a.ppm", 5);
    Rng rng(req.seed);
    const auto [image, placed] = simulate_generate(req, GeneratorConfig{}, rng);
    ASSERT_EQ(placed.size(), 3u);
    for (std::size_t i = 0; i < placed.size(); ++i) {
        EXPECT_EQ(placed[i].bbox, req.layout.instances[i].bbox);
        EXPECT_EQ(placed[i].id, req.layout.instances[i].id);
    }
    EXPECT_EQ(image.width, 200);
    EXPECT_EQ(image.height, 160);
    EXPECT_EQ(image.path, req.output_path);
}

TEST(SimGenerateTest, SameSeedSameBytes) {
    testutil::TempDir dir("gen2");
    GeneratorConfig cfg;
    cfg.placement_noise = 0.02;
    Rng a(9), b(9);
    simulate_generate(gen_request(dir / "a.ppm", 9), cfg, a);
    simulate_generate(gen_request(dir / "b.ppm", 9), cfg, b);
    EXPECT_EQ(read_file(dir / "a.ppm"), read_file(dir / "b.ppm"));
}

TEST(SimGenerateTest, UnwritableOutput) {
    Rng rng(1);
    EXPECT_THROW(simulate_generate(gen_request("/nonexistent-dir/x/a.ppm", 1), GeneratorConfig{}, rng), Error);
}

TEST(SimGenerateTest, NoiseMatchesFoldedNormal) {
    testutil::TempDir dir("gen3");
    GeneratorConfig cfg;
    cfg.placement_noise = 0.05;
    double err = 0.0;
    std::size_t n = 0;
    for (int t = 0; n < 4000; ++t) {
        // 1000 instances, 4 coordinates each.
        auto req = gen_request(dir / "n.ppm", static_cast<std::uint64_t>(t));
        req.layout.instances.resize(1);
        req.layout.instances[0].bbox = BBox(0.3, 0.3, 0.7, 0.7);
        req.width = req.height = 8;
        Rng rng(derive_seed(3, {static_cast<std::uint64_t>(t)}));
        const auto placed = simulate_generate(req, cfg, rng).second;
        const auto a = placed[0].bbox.to_array();
        const auto b = req.layout.instances[0].bbox.to_array();
        for (int k = 0; k < 4; ++k) err += std::abs(a[k] - b[k]);
        n += 4;
    }
    const double expected = oracle::folded_normal_mean(0.05);
    EXPECT_NEAR(err / static_cast<double>(n), expected, 0.15 * expected);
}

TEST(SimDetectTest, IdentityConfig) {
    const auto p = placements(6);
    DetectorConfig cfg;
    Rng rng(2);
    const auto d = simulate_detect(p, cfg, rng);
    ASSERT_EQ(d.size(), p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(d[i].bbox, p[i].bbox);
        EXPECT_EQ(d[i].cate, p[i].cate);
        EXPECT_GE(d[i].confidence, cfg.confidence_min);
        EXPECT_LE(d[i].confidence, cfg.confidence_max);
    }
}

TEST(SimDetectTest, CertainDrop) {
    DetectorConfig cfg;
    cfg.miss_rate = 1.0;
    Rng rng(2);
    EXPECT_TRUE(simulate_detect(placements(6), cfg, rng).empty());
}

TEST(SimDetectTest, DropFractionMatchesBinomial) {
    DetectorConfig cfg;
    cfg.miss_rate = 0.3;
    const auto p = placements(100);
    std::size_t kept = 0;
    for (int t = 0; t < 100; ++t) {
        Rng rng(derive_seed(17, {static_cast<std::uint64_t>(t)}));
        kept += simulate_detect(p, cfg, rng).size();
    }
    const double dropped = 1.0 - static_cast<double>(kept) / 10000.0;
    EXPECT_NEAR(dropped, 0.3, 0.01);
}

TEST(SimDetectTest, Deterministic) {
    DetectorConfig cfg;
    cfg.miss_rate = 0.4;
    cfg.jitter = 0.02;
    Rng a(8), b(8);
    EXPECT_EQ(simulate_detect(placements(20), cfg, a), simulate_detect(placements(20), cfg, b));
}

TEST(SimDetectTest, ConfigValidation) {
    DetectorConfig cfg;
    cfg.miss_rate = -0.1;
    EXPECT_THROW(cfg.validate(), Error);
    cfg.miss_rate = 0.1;
    cfg.confidence_min = 0.9;
    cfg.confidence_max = 0.5;
    EXPECT_THROW(cfg.validate(), Error);
}

TEST(RenderTest, DecodeRecoversPixelBoxes) {
    std::vector<Placement> p{{0, "dog", BBox(0.1, 0.1, 0.6, 0.7)}, {1, "cat", BBox(0.5, 0.5, 0.9, 0.95)}};
    const auto im = render(p, 200, 100);
    const auto back = decode_placements(im, {"dog", "cat"});
    ASSERT_EQ(back.size(), 2u);
    for (const auto& b : back) {
        const auto& src = p[static_cast<std::size_t>(b.id)];
        EXPECT_EQ(b.cate, src.cate);
        EXPECT_GT(iou(b.bbox, src.bbox), 0.95);
    }
    EXPECT_EQ(decode_placements(im, {"cat"}).size(), 1u);
}

TEST(RenderTest, ColorsDistinguishCategoriesAndSlots) {
    EXPECT_NE(instance_color("dog", 0), instance_color("cat", 0));
    EXPECT_NE(instance_color("dog", 0), instance_color("dog", 1));
    EXPECT_EQ(instance_color("Dog", 2), instance_color("dog", 2));
}

TEST(ContentSeedTest, DependsOnBytesAndName) {
    EXPECT_EQ(content_seed("abc", "d"), content_seed("abc", "d"));
    EXPECT_NE(content_seed("abc", "d"), content_seed("abd", "d"));
    EXPECT_NE(content_seed("abc", "d"), content_seed("abc", "e"));
}

TEST(SimServerTest, GeneratorDetectorAgree) {
    testutil::TempDir dir("srv");
    auto gen = make_sim_server("generator");
    auto det = make_sim_server("detector");
    const auto req = gen_request(dir / "g.ppm", 4);
    nlohmann::json msg = {{"id", 1}, {"op", "generate"}, {"request", protocol::encode(req)}};
    const auto reply = nlohmann::json::parse(gen->handle_line(msg.dump()));
    ASSERT_EQ(reply["status"], "ok") << reply.dump();
    nlohmann::json dmsg = {{"id", 2}, {"op", "detect"}, {"image", req.output_path}, {"vocabulary", {"dog", "person"}}};
    const auto dreply = nlohmann::json::parse(det->handle_line(dmsg.dump()));
    ASSERT_EQ(dreply["status"], "ok") << dreply.dump();
    EXPECT_EQ(dreply["detections"].size(), 3u);
    nlohmann::json only = {{"id", 3}, {"op", "detect"}, {"image", req.output_path}, {"vocabulary", {"person"}}};
    const auto oreply = nlohmann::json::parse(det->handle_line(only.dump()));
    ASSERT_EQ(oreply["detections"].size(), 1u);
    EXPECT_EQ(oreply["detections"][0]["cate"], "person");
}

}  // namespace
}  // namespace lsynth::sim
