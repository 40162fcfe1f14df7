// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <vector>

#include "lsynth/error.hpp"
#include "lsynth/layout.hpp"
#include "oracles.hpp"

namespace lsynth {
namespace {

InstanceSpec inst(int id, const std::string& label, BBox box) {
    return {id, label, "a " + label, label, box, std::nullopt};
}

LayoutRequest request_of(std::vector<CategoryCount> cats, std::uint64_t seed = 1) {
    LayoutRequest r;
    r.categories = std::move(cats);
    r.seed = seed;
    return r;
}

std::size_t count_cate(const Layout& l, const std::string& cate) {
    return static_cast<std::size_t>(
        std::count_if(l.instances.begin(), l.instances.end(), [&](const auto& i) { return i.cate == cate; }));
}

class ScriptedProposer final : public LayoutProposer {
public:
    explicit ScriptedProposer(std::vector<Layout> replies) : replies_(std::move(replies)) {}
    Layout propose(const LayoutRequest&) override {
        ++calls;
        return replies_.at(std::min(calls - 1, replies_.size() - 1));
    }
    std::size_t calls = 0;

private:
    std::vector<Layout> replies_;
};

// ---- validation and proposal ------------------------------------------------

TEST(LayoutTest, ValidateCatchesBrokenInvariants) {
    Layout ok{"scene", {inst(0, "dog", BBox(0.1, 0.1, 0.3, 0.3))}, std::nullopt};
    EXPECT_NO_THROW(ok.validate());

    Layout dup = ok;
    dup.instances.push_back(inst(0, "cat", BBox(0.5, 0.5, 0.7, 0.7)));
    EXPECT_THROW(dup.validate(), ValidationError);

    Layout empty{"scene", {}, std::nullopt};
    EXPECT_THROW(empty.validate(), ValidationError);

    Layout outside{"scene", {inst(0, "dog", BBox(0.9, 0.1, 1.2, 0.3))}, std::nullopt};
    EXPECT_THROW(outside.validate(), ValidationError);

    Layout too_many{"scene", {}, std::nullopt};
    for (int i = 0; i < 11; ++i) too_many.instances.push_back(inst(i, "dog", BBox(0.1, 0.1, 0.2, 0.2)));
    EXPECT_THROW(too_many.validate(), ValidationError);
    EXPECT_NO_THROW(too_many.validate(11));
}

TEST(ProposeLayoutTest, RequestedCategoriesPresent) {
    ScriptedProposer p({Layout{"s",
                               {inst(0, "dog", BBox(0.1, 0.1, 0.4, 0.4)), inst(1, "person", BBox(0.5, 0.1, 0.8, 0.9))},
                               std::nullopt}});
    const auto l = propose_layout(request_of({{"dog", 1}, {"person", 1}}), p);
    EXPECT_GE(count_cate(l, "dog"), 1u);
    EXPECT_GE(count_cate(l, "person"), 1u);
    EXPECT_NO_THROW(l.validate());
    EXPECT_EQ(p.calls, 1u);
}

TEST(ProposeLayoutTest, RetriesThenFailsWithViolations) {
    ScriptedProposer p({Layout{"s", {inst(0, "dog", BBox(0.1, 0.1, 0.4, 0.4))}, std::nullopt}});
    try {
        propose_layout(request_of({{"dog", 1}, {"person", 1}}), p, 2);
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_FALSE(e.violations().empty());
    }
    EXPECT_EQ(p.calls, 3u);
}

TEST(ProposeLayoutTest, RetrySucceedsOnLaterReply) {
    ScriptedProposer p({Layout{"s", {inst(0, "dog", BBox(0.1, 0.1, 0.4, 0.4))}, std::nullopt},
                        Layout{"s",
                               {inst(0, "dog", BBox(0.1, 0.1, 0.4, 0.4)), inst(1, "person", BBox(0.5, 0.1, 0.8, 0.9))},
                               std::nullopt}});
    const auto l = propose_layout(request_of({{"dog", 1}, {"person", 1}}), p);
    EXPECT_EQ(p.calls, 2u);
    EXPECT_EQ(l.instances.size(), 2u);
}

TEST(ProposeLayoutTest, AddAndRemoveRulesChecked) {
    auto req = request_of({{"dog", 1}});
    req.rules.push_back({RuleKind::Add, "umbrella", {}});
    req.rules.push_back({RuleKind::Remove, "cat", {}});

    Layout missing{"s", {inst(0, "dog", BBox(0.1, 0.1, 0.4, 0.4))}, std::nullopt};
    EXPECT_FALSE(check_against_request(req, missing).empty());

    Layout has_cat{"s",
                   {inst(0, "dog", BBox(0.1, 0.1, 0.4, 0.4)), inst(1, "umbrella", BBox(0.5, 0.1, 0.7, 0.4)),
                    inst(2, "cat", BBox(0.1, 0.6, 0.3, 0.9))},
                   std::nullopt};
    EXPECT_FALSE(check_against_request(req, has_cat).empty());

    Layout good{"s", {inst(0, "dog", BBox(0.1, 0.1, 0.4, 0.4)), inst(1, "umbrella", BBox(0.5, 0.1, 0.7, 0.4))},
                std::nullopt};
    EXPECT_TRUE(check_against_request(req, good).empty());
}

TEST(ProposeLayoutTest, NormalizesReply) {
    auto req = request_of({{"Dog", 1}});
    req.reference_images["Dog"] = "refs/dog.png";
    req.style_ref = "style.png";
    InstanceSpec raw{0, "Dog", "", "", BBox(0.8, 0.1, 1.1, 0.4), std::string("invented.png")};
    Layout l{"s", {raw}, std::nullopt};
    EXPECT_TRUE(check_against_request(req, l).empty());
    const auto& i = l.instances[0];
    EXPECT_EQ(i.cate, "dog");
    EXPECT_FALSE(i.desc.empty());
    EXPECT_TRUE(i.bbox.in_canvas());
    EXPECT_NEAR(i.bbox.width(), 0.3, 1e-12);
    EXPECT_FALSE(i.ref.has_value());
    EXPECT_EQ(l.style_ref, req.style_ref);
}

TEST(ProposeLayoutTest, KeepsUserSuppliedRef) {
    auto req = request_of({{"dog", 1}});
    req.reference_images["dog"] = "refs/dog.png";
    Layout l{"s", {inst(0, "dog", BBox(0.1, 0.1, 0.4, 0.4))}, std::nullopt};
    l.instances[0].ref = "refs/dog.png";
    EXPECT_TRUE(check_against_request(req, l).empty());
    EXPECT_EQ(l.instances[0].ref, std::optional<std::string>("refs/dog.png"));
}

// ---- fallback proposer ------------------------------------------------------

TEST(FallbackTest, CountAndDeterminism) {
    StatsTable stats;
    const auto req = request_of({{"dog", 2}, {"car", 1}}, 77);
    Rng a(req.seed), b(req.seed);
    const auto x = fallback_propose(req, stats, a);
    const auto y = fallback_propose(req, stats, b);
    EXPECT_EQ(x.instances.size(), 3u);
    EXPECT_EQ(x, y);
    EXPECT_NO_THROW(x.validate());
    EXPECT_EQ(serialize_layout(x), serialize_layout(y));
}

TEST(FallbackTest, InitialBoxPassThrough) {
    StatsTable stats;
    LayoutRequest req;
    req.initial_boxes.push_back({"person", BBox(0.1, 0.1, 0.3, 0.9)});
    Rng rng(5);
    const auto l = fallback_propose(req, stats, rng);
    ASSERT_EQ(l.instances.size(), 1u);
    EXPECT_EQ(l.instances[0].cate, "person");
    EXPECT_EQ(l.instances[0].bbox, BBox(0.1, 0.1, 0.3, 0.9));
}

TEST(FallbackTest, ZeroStdGivesMeanWidth) {
    StatsTable stats;
    stats.insert({"dog", 0.25, 0.0, 0.8, 0.0, 3});
    Rng rng(9);
    const auto l = fallback_propose(request_of({{"dog", 1}}), stats, rng);
    ASSERT_EQ(l.instances.size(), 1u);
    EXPECT_NEAR(l.instances[0].bbox.width(), 0.25, 1e-12);
    EXPECT_NEAR(l.instances[0].bbox.height(), 0.2, 1e-12);
}

TEST(FallbackTest, RemoveAndReplaceRules) {
    StatsTable stats;
    LayoutRequest req;
    req.initial_boxes.push_back({"cat", BBox(0.1, 0.1, 0.3, 0.3)});
    req.initial_boxes.push_back({"dog", BBox(0.5, 0.5, 0.7, 0.7)});
    req.rules.push_back({RuleKind::Remove, "cat", {}});
    req.rules.push_back({RuleKind::Replace, "dog", std::string("wolf")});
    req.rules.push_back({RuleKind::Add, "umbrella", {}});
    Rng rng(1);
    const auto l = fallback_propose(req, stats, rng);
    EXPECT_EQ(count_cate(l, "cat"), 0u);
    EXPECT_EQ(count_cate(l, "dog"), 0u);
    EXPECT_EQ(count_cate(l, "wolf"), 1u);
    EXPECT_EQ(count_cate(l, "umbrella"), 1u);
    EXPECT_TRUE(check_against_request(req, *const_cast<Layout*>(&l)).empty());
}

TEST(FallbackTest, ConstrainRegionRespected) {
    StatsTable stats;
    stats.insert({"dog", 0.1, 0.0, 1.0, 0.0, 3});
    auto req = request_of({{"dog", 3}}, 4);
    const BBox region(0.5, 0.5, 1.0, 1.0);
    req.rules.push_back({RuleKind::Constrain, "dog", region});
    Rng rng(4);
    const auto l = fallback_propose(req, stats, rng);
    for (const auto& i : l.instances) {
        EXPECT_GE(i.bbox.x_min(), region.x_min() - 1e-12);
        EXPECT_GE(i.bbox.y_min(), region.y_min() - 1e-12);
        EXPECT_LE(i.bbox.x_max(), region.x_max() + 1e-12);
        EXPECT_LE(i.bbox.y_max(), region.y_max() + 1e-12);
    }
}

TEST(FallbackTest, SceneTemplateListsCategories) {
    StatsTable stats;
    Rng rng(2);
    const auto l = fallback_propose(request_of({{"dog", 1}, {"car", 1}}), stats, rng);
    EXPECT_NE(l.scene.find("dog"), std::string::npos);
    EXPECT_NE(l.scene.find("car"), std::string::npos);
}

// ---- size step ----------------------------------------------------------------

TEST(AdjustSizeTest, BlendArithmetic) {
    const auto in = inst(0, "dog", BBox::from_center({0.5, 0.5}, 0.4, 0.4));
    const auto out = blend_size(in, {0.2, 1.0}, 0.2);
    EXPECT_NEAR(out.bbox.width(), 0.36, 1e-12);
    EXPECT_NEAR(out.bbox.height(), 0.36, 1e-12);
}

TEST(AdjustSizeTest, FixedPoint) {
    const auto in = inst(0, "dog", BBox(0.2, 0.3, 0.5, 0.9));
    const auto out = blend_size(in, {in.bbox.width(), in.bbox.aspect()}, 0.15);
    EXPECT_NEAR(out.bbox.x_min(), in.bbox.x_min(), 1e-12);
    EXPECT_NEAR(out.bbox.y_min(), in.bbox.y_min(), 1e-12);
    EXPECT_NEAR(out.bbox.x_max(), in.bbox.x_max(), 1e-12);
    EXPECT_NEAR(out.bbox.y_max(), in.bbox.y_max(), 1e-12);
}

TEST(AdjustSizeTest, NullStatsUnchanged) {
    const auto in = inst(0, "dog", BBox(0.2, 0.3, 0.5, 0.9));
    Rng a(3), b(3);
    EXPECT_EQ(adjust_size(in, nullptr, a), in);
    EXPECT_EQ(a(), b());
}

TEST(AdjustSizeTest, CenterPreservedWithoutClamping) {
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> c(0.3, 0.7);
    std::uniform_real_distribution<double> s(0.05, 0.2);
    const CategoryStats st{"dog", 0.15, 0.03, 1.0, 0.2, 10};
    for (int i = 0; i < 1000; ++i) {
        const Point center{c(gen), c(gen)};
        const auto in = inst(0, "dog", BBox::from_center(center, s(gen), s(gen)));
        Rng rng(i);
        const auto out = adjust_size(in, &st, rng);
        if (!out.bbox.in_canvas()) continue;
        const bool clamped = in.bbox.center().x - out.bbox.width() / 2 < 0 ||
                             in.bbox.center().x + out.bbox.width() / 2 > 1 ||
                             in.bbox.center().y - out.bbox.height() / 2 < 0 ||
                             in.bbox.center().y + out.bbox.height() / 2 > 1;
        if (clamped) continue;
        EXPECT_NEAR(out.bbox.center().x, center.x, 1e-12);
        EXPECT_NEAR(out.bbox.center().y, center.y, 1e-12);
    }
}

TEST(AdjustSizeTest, AlphaWithinBlendRange) {
    // With std 0 the empirical sample is exact, so alpha can be recovered.
    const CategoryStats st{"dog", 0.2, 0.0, 1.0, 0.0, 5};
    for (int i = 0; i < 200; ++i) {
        const auto in = inst(0, "dog", BBox::from_center({0.5, 0.5}, 0.4, 0.4));
        Rng rng(i);
        const double w = adjust_size(in, &st, rng).bbox.width();
        const double alpha = (0.4 - w) / (0.4 - 0.2);
        EXPECT_GE(alpha, kBlendMin - 1e-9);
        EXPECT_LE(alpha, kBlendMax + 1e-9);
    }
}

// ---- position step --------------------------------------------------------------

TEST(AdjustPositionTest, AloneStaysPut) {
    Layout l{"s", {inst(0, "dog", BBox(0.2, 0.2, 0.5, 0.5))}, std::nullopt};
    Rng rng(1);
    EXPECT_EQ(adjust_position(l.instances[0], l, rng).bbox, l.instances[0].bbox);
    EXPECT_EQ(best_position(l.instances[0].bbox, {}, 0.1).direction, Direction::Stay);
}

TEST(AdjustPositionTest, NeighborToTheEastPushesWest) {
    const BBox box(0.4, 0.4, 0.6, 0.6);
    const std::vector<BBox> others{BBox(0.55, 0.4, 0.75, 0.6)};
    for (double step : {0.05, 0.08, 0.1, 0.15}) {
        const auto choice = best_position(box, others, step);
        EXPECT_LT(choice.bbox.center().x, box.center().x) << step;
        EXPECT_EQ(choice.ratio, 0.0) << step;
        const std::vector<oracle::Box> ob{others[0].to_array()};
        EXPECT_EQ(static_cast<int>(choice.direction), oracle::nine_candidate_argmin(box.to_array(), ob, step));
    }
}

TEST(AdjustPositionTest, DirectionVectorsHaveUnitLength) {
    for (auto d : kDirections) {
        const auto v = direction_vector(d);
        const double len = std::hypot(v.x, v.y);
        EXPECT_NEAR(len, d == Direction::Stay ? 0.0 : 1.0, 1e-15);
    }
    EXPECT_LT(direction_vector(Direction::N).y, 0.0);
}

TEST(AdjustPositionTest, MatchesNineCandidateOracle) {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    std::uniform_real_distribution<double> side(0.05, 0.5);
    std::uniform_real_distribution<double> step(kStepMin, kStepMax);
    for (int t = 0; t < 500; ++t) {
        std::vector<BBox> boxes;
        const int n = 2 + t % 7;
        for (int i = 0; i < n; ++i) {
            boxes.push_back(clamp_to_canvas(BBox::from_center({pos(gen), pos(gen)}, side(gen), side(gen))));
        }
        const std::vector<BBox> others(boxes.begin() + 1, boxes.end());
        std::vector<oracle::Box> ob;
        for (const auto& b : others) ob.push_back(b.to_array());
        const double d = step(gen);
        const auto choice = best_position(boxes[0], others, d);
        EXPECT_EQ(static_cast<int>(choice.direction), oracle::nine_candidate_argmin(boxes[0].to_array(), ob, d));
    }
}

// ---- whole-layout adjustment ------------------------------------------------------

Layout random_layout(std::mt19937_64& gen, int n) {
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    std::uniform_real_distribution<double> side(0.05, 0.5);
    const char* names[] = {"dog", "cat", "car", "person"};
    Layout l{"scene", {}, std::nullopt};
    for (int i = 0; i < n; ++i) {
        l.instances.push_back(
            inst(i, names[i % 4], clamp_to_canvas(BBox::from_center({pos(gen), pos(gen)}, side(gen), side(gen)))));
    }
    return l;
}

TEST(AdjustLayoutTest, PreservesIdentityFields) {
    std::mt19937_64 gen(41);
    StatsTable stats;
    stats.insert({"dog", 0.3, 0.1, 1.0, 0.3, 9});
    stats.insert({"car", 0.4, 0.1, 0.6, 0.1, 9});
    for (int t = 0; t < 200; ++t) {
        auto l = random_layout(gen, 1 + t % 8);
        l.instances[0].ref = "r.png";
        Rng rng(t);
        const auto out = adjust_layout(l, stats, rng);
        ASSERT_EQ(out.instances.size(), l.instances.size());
        EXPECT_EQ(out.scene, l.scene);
        for (std::size_t i = 0; i < l.instances.size(); ++i) {
            EXPECT_EQ(out.instances[i].id, l.instances[i].id);
            EXPECT_EQ(out.instances[i].label, l.instances[i].label);
            EXPECT_EQ(out.instances[i].desc, l.instances[i].desc);
            EXPECT_EQ(out.instances[i].cate, l.instances[i].cate);
            EXPECT_EQ(out.instances[i].ref, l.instances[i].ref);
            EXPECT_TRUE(out.instances[i].bbox.in_canvas());
        }
    }
}

TEST(AdjustLayoutTest, EmptyStatsOnlyMovesBoxes) {
    std::mt19937_64 gen(42);
    StatsTable stats;
    for (int t = 0; t < 100; ++t) {
        const auto l = random_layout(gen, 2 + t % 6);
        Rng rng(t);
        const auto out = adjust_layout(l, stats, rng);
        for (std::size_t i = 0; i < l.instances.size(); ++i) {
            EXPECT_NEAR(out.instances[i].bbox.width(), l.instances[i].bbox.width(), 1e-12);
            EXPECT_NEAR(out.instances[i].bbox.height(), l.instances[i].bbox.height(), 1e-12);
        }
    }
}

TEST(AdjustLayoutTest, SameSeedSameOutput) {
    std::mt19937_64 gen(43);
    StatsTable stats;
    stats.insert({"dog", 0.3, 0.1, 1.0, 0.3, 9});
    const auto l = random_layout(gen, 6);
    Rng a(8), b(8);
    EXPECT_EQ(adjust_layout(l, stats, a), adjust_layout(l, stats, b));
}

TEST(AdjustLayoutTest, OverlapFreeLayoutUntouched) {
    Layout l{"s",
             {inst(0, "dog", BBox(0.0, 0.0, 0.2, 0.2)), inst(1, "cat", BBox(0.5, 0.5, 0.7, 0.7)),
              inst(2, "car", BBox(0.0, 0.7, 0.3, 0.9))},
             std::nullopt};
    Rng rng(2);
    EXPECT_EQ(adjust_layout(l, StatsTable{}, rng), l);
}

// ---- files ---------------------------------------------------------------------------

TEST(LayoutFileTest, ByteStableRoundTrip) {
    Layout l{"a dog in a park",
             {inst(0, "dog", BBox(0.1, 0.2, 0.45, 0.6)), inst(3, "person", BBox(0.5, 0.05, 0.9, 0.95))},
             std::string("style.png")};
    l.instances[1].ref = "ref.png";
    const auto text = serialize_layout(l);
    EXPECT_NE(text.find("0.100000"), std::string::npos);
    const auto back = parse_layout(text);
    EXPECT_EQ(serialize_layout(back), text);
    EXPECT_EQ(back.instances[1].ref, l.instances[1].ref);
    EXPECT_EQ(back.style_ref, l.style_ref);
}

TEST(LayoutFileTest, RejectsBadDocuments) {
    EXPECT_THROW(parse_layout("{"), ParseError);
    EXPECT_THROW(parse_layout(R"({"scene": "s", "instances": [{"id": 0, "label": "dog", "bbox": [0.5, 0, 0.2, 1]}]})"),
                 ParseError);
    EXPECT_THROW(parse_layout(R"({"instances": []})"), ParseError);
}

TEST(RequestFileTest, RoundTrip) {
    LayoutRequest r = request_of({{"dog", 2}, {"person", 1}}, 12);
    r.rules.push_back({RuleKind::Add, "umbrella", BBox(0.1, 0.1, 0.3, 0.3)});
    r.rules.push_back({RuleKind::Scene, "", std::string("a beach")});
    r.initial_boxes.push_back({"car", BBox(0.5, 0.5, 0.9, 0.8)});
    r.reference_images["dog"] = "dog.png";
    r.style_ref = "style.png";
    EXPECT_EQ(parse_request(serialize_request(r)), r);
}

TEST(RequestFileTest, AcceptsBareCategoryNames) {
    const auto r = parse_request(R"({"categories": ["dog", {"name": "cat", "count": 2}], "seed": 3})");
    ASSERT_EQ(r.categories.size(), 2u);
    EXPECT_EQ(r.categories[0], (CategoryCount{"dog", 1}));
    EXPECT_EQ(r.categories[1], (CategoryCount{"cat", 2}));
    EXPECT_EQ(r.seed, 3u);
}

TEST(RequestTest, NeedsCategoriesOrBoxes) {
    EXPECT_THROW(LayoutRequest{}.validate(), ValidationError);
    LayoutRule r{RuleKind::Add, "", {}};
    auto req = request_of({{"dog", 1}});
    req.rules.push_back(r);
    EXPECT_THROW(req.validate(), ValidationError);
}

TEST(RuleKindTest, NamesRoundTrip) {
    for (auto k : {RuleKind::Add, RuleKind::Remove, RuleKind::Replace, RuleKind::Scene, RuleKind::Constrain}) {
        EXPECT_EQ(parse_rule_kind(to_string(k)), k);
    }
    EXPECT_THROW(parse_rule_kind("explode"), std::invalid_argument);
}

}  // namespace
}  // namespace lsynth
