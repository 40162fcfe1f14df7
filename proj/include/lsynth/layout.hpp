// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lsynth/geometry.hpp"
#include "lsynth/rng.hpp"
#include "lsynth/stats.hpp"

namespace lsynth {

struct InstanceSpec {
    int id = 0;
    std::string label;               // category name as shown to the generator
    std::string desc;                // free-text attribute description
    std::string cate;                // single-word detection category
    BBox bbox;
    std::optional<std::string> ref;  // reference image for this instance

    friend bool operator==(const InstanceSpec&, const InstanceSpec&) = default;
};

inline constexpr std::size_t kDefaultMaxInstances = 10;

struct Layout {
    std::string scene;
    std::vector<InstanceSpec> instances;
    std::optional<std::string> style_ref;

    const InstanceSpec* find(int id) const;
    std::vector<BBox> boxes() const;

    /// Throws ValidationError listing every broken invariant.
    void validate(std::size_t max_instances = kDefaultMaxInstances) const;

    friend bool operator==(const Layout&, const Layout&) = default;
};

enum class RuleKind { Add, Remove, Replace, Scene, Constrain };

std::string_view to_string(RuleKind kind);
RuleKind parse_rule_kind(std::string_view s);

/// add: argument may be a BBox where the new object goes.
/// replace: argument is the replacement category.
/// scene: argument is the scene text.
/// constrain: a BBox argument is a region the subject must stay inside;
/// text arguments are forwarded to the proposer only.
struct LayoutRule {
    RuleKind kind = RuleKind::Add;
    std::string subject;
    std::variant<std::monostate, std::string, BBox> argument;

    friend bool operator==(const LayoutRule&, const LayoutRule&) = default;
};

struct CategoryCount {
    std::string name;
    int count = 1;

    friend bool operator==(const CategoryCount&, const CategoryCount&) = default;
};

struct InitialBox {
    std::string label;
    BBox bbox;

    friend bool operator==(const InitialBox&, const InitialBox&) = default;
};

struct LayoutRequest {
    std::vector<CategoryCount> categories;
    std::vector<LayoutRule> rules;
    std::vector<InitialBox> initial_boxes;
    std::map<std::string, std::string> reference_images;  // label -> image path
    std::optional<std::string> style_ref;
    std::uint64_t seed = 0;

    void validate() const;

    friend bool operator==(const LayoutRequest&, const LayoutRequest&) = default;
};

// ---- layout file / request file -------------------------------------------

/// Layout document with floats at 6 decimal places. Byte-stable: writing a
/// parsed layout reproduces the text it was parsed from.
std::string serialize_layout(const Layout& layout);
Layout parse_layout(std::string_view text);

std::string serialize_request(const LayoutRequest& request);
LayoutRequest parse_request(std::string_view text);

// ---- initialization ---------------------------------------------------------

/// Source of initial layouts, e.g. a language-model backend.
class LayoutProposer {
public:
    virtual ~LayoutProposer() = default;
    virtual Layout propose(const LayoutRequest& request) = 0;
};

/// Normalizes a proposer reply against the request: fills missing desc and
/// cate from the label, clamps boxes into the canvas, drops reference flags
/// the user did not supply. Returns the rules the reply violates.
std::vector<std::string> check_against_request(const LayoutRequest& request, Layout& layout,
                                               std::size_t max_instances = kDefaultMaxInstances);

/// Asks the proposer for a layout, retrying on rule violations. Throws
/// ValidationError after `retries` failed retries; BackendError from the
/// proposer propagates unchanged.
Layout propose_layout(const LayoutRequest& request, LayoutProposer& proposer, int retries = 2,
                      std::size_t max_instances = kDefaultMaxInstances);

/// Deterministic proposer used when no language-model backend is
/// configured. Never fails to place an instance.
Layout fallback_propose(const LayoutRequest& request, const StatsTable& stats, Rng& rng,
                        std::size_t max_instances = kDefaultMaxInstances);

class FallbackProposer final : public LayoutProposer {
public:
    explicit FallbackProposer(const StatsTable& stats,
                              std::size_t max_instances = kDefaultMaxInstances)
        : stats_(stats), max_instances_(max_instances) {}

    Layout propose(const LayoutRequest& request) override;

private:
    const StatsTable& stats_;
    std::size_t max_instances_;
};

inline constexpr int kPlacementAttempts = 20;

// ---- adjustment -------------------------------------------------------------

inline constexpr double kBlendMin = 0.1;
inline constexpr double kBlendMax = 0.2;
inline constexpr double kStepMin = 0.05;
inline constexpr double kStepMax = 0.15;

/// Blends the instance's width and aspect toward an empirical sample with
/// weight `alpha`, resizing about the unchanged center, then clamps.
InstanceSpec blend_size(const InstanceSpec& inst, const EmpiricalSample& empirical, double alpha);

/// Size step with sampled empirical size and alpha ~ U(0.1, 0.2). A null
/// `stats` returns the instance unchanged without consuming randomness.
InstanceSpec adjust_size(const InstanceSpec& inst, const CategoryStats* stats, Rng& rng);

enum class Direction { Stay, N, NE, E, SE, S, SW, W, NW };

/// Candidate order, which is also the tie-break order.
inline constexpr std::array<Direction, 9> kDirections = {
    Direction::Stay, Direction::N, Direction::NE, Direction::E, Direction::SE,
    Direction::S,    Direction::SW, Direction::W, Direction::NW};

/// Unit displacement for a direction in image coordinates (y grows down).
Point direction_vector(Direction d);

struct PositionChoice {
    BBox bbox;
    Direction direction = Direction::Stay;
    double ratio = 0.0;
};

/// Evaluates the 9 candidate positions at step `step` against `others` and
/// returns the first one with minimal overlap ratio.
PositionChoice best_position(const BBox& box, std::span<const BBox> others, double step);

/// Position step with step ~ U(0.05, 0.15); overlap is measured against the
/// current boxes of every other instance of `layout`.
InstanceSpec adjust_position(const InstanceSpec& inst, const Layout& layout, Rng& rng);

/// Size then position step for each instance, largest initial area first.
Layout adjust_layout(const Layout& layout, const StatsTable& stats, Rng& rng);

}  // namespace lsynth
