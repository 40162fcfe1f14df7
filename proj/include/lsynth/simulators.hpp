// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lsynth/backend.hpp"
#include "lsynth/filtering.hpp"
#include "lsynth/protocol.hpp"
#include "lsynth/rng.hpp"
#include "lsynth/stats.hpp"

// Built-in backends standing in for neural models. The generator paints one
// flat rectangle per instance whose color encodes the instance's category;
// the detector recovers boxes from those colors, so every backend talks
// only through image files as a real one would.
namespace lsynth::sim {

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}
};

/// Binary PPM (P6).
std::string encode_ppm(const RgbImage& image);
RgbImage decode_ppm(std::string_view bytes);
void write_ppm(const std::string& path, const RgbImage& image);
RgbImage read_ppm(const std::string& path);

struct Placement {
    int id = 0;
    std::string cate;
    BBox bbox;

    friend bool operator==(const Placement&, const Placement&) = default;
};

struct GeneratorConfig {
    std::string name = "sim-generator";
    double placement_noise = 0.0;  // per-coordinate Gaussian sigma
};

struct DetectorConfig {
    std::string name = "sim-detector";
    double miss_rate = 0.0;
    double jitter = 0.0;  // per-coordinate Gaussian sigma
    double confidence_min = 0.5;
    double confidence_max = 1.0;

    void validate() const;
};

struct ScorerConfig {
    std::string name = "sim-scorer";
    double score_min = 0.0;  // declared raw range
    double score_max = 1.0;
};

struct ProposerConfig {
    std::string name = "sim-proposer";
    std::string stats_path;  // empty: built-in default stats
};

/// Colour key for an instance: R,G from the category, B from its slot.
std::array<std::uint8_t, 3> instance_color(std::string_view cate, std::size_t slot);

/// Renders the placements, larger boxes first, onto a black canvas.
RgbImage render(std::span<const Placement> placements, int width, int height);

/// Recovers one box per painted instance whose category is in `vocabulary`.
std::vector<Placement> decode_placements(const RgbImage& image,
                                         const std::vector<std::string>& vocabulary);

/// Perturbs layout boxes by the placement noise, renders them to
/// request.output_path and returns the image with the placements used.
std::pair<CandidateImage, std::vector<Placement>> simulate_generate(
    const protocol::GenerationRequest& request, const GeneratorConfig& config, Rng& rng);

/// Drops each placement with probability miss_rate, jitters survivors and
/// draws a confidence in [confidence_min, confidence_max].
std::vector<Detection> simulate_detect(std::span<const Placement> placements,
                                       const DetectorConfig& config, Rng& rng);

/// Deterministic seed for per-image simulator randomness.
std::uint64_t content_seed(std::string_view image_bytes, std::string_view backend_name);

/// Protocol server around one simulator.
class SimServer final : public Server {
public:
    explicit SimServer(GeneratorConfig config);
    explicit SimServer(DetectorConfig config);
    explicit SimServer(ScorerConfig config);
    explicit SimServer(ProposerConfig config);

    std::string handle_line(const std::string& line) override;
    bool finished() const override { return finished_; }

    protocol::Role role() const noexcept { return role_; }

private:
    nlohmann::json dispatch(protocol::Op op, const nlohmann::json& msg, std::uint64_t id);

    protocol::Role role_;
    GeneratorConfig generator_;
    DetectorConfig detector_;
    ScorerConfig scorer_;
    ProposerConfig proposer_;
    std::shared_ptr<const StatsTable> stats_;
    bool finished_ = false;
};

/// Parses "role key=value ..." (the text after "sim:" in a backend spec)
/// into a server. Throws ConfigError on unknown roles or keys.
std::unique_ptr<SimServer> make_sim_server(const std::string& spec);

}  // namespace lsynth::sim
