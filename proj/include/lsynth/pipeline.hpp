// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lsynth/annotate.hpp"
#include "lsynth/backend.hpp"
#include "lsynth/filtering.hpp"
#include "lsynth/layout.hpp"
#include "lsynth/schedule.hpp"

namespace lsynth {

/// Backend specs are either "sim:<role> key=value ..." for a built-in
/// simulator or a shell command line that starts a protocol backend.
struct PipelineConfig {
    std::string stats_path;
    std::vector<std::string> categories;
    std::optional<std::string> proposer;  // unset: built-in fallback proposer
    std::string generator;
    std::vector<std::string> detectors;
    std::string scorer;
    std::optional<std::size_t> refiner;  // detector index; default the second one
    int images = 1;
    int instances_min = 1;
    int instances_max = 4;
    int candidates = 4;  // K
    std::set<AnnotationFormat> formats{AnnotationFormat::Bbox};
    std::uint64_t master_seed = 0;
    std::filesystem::path output_dir;
    int max_regenerations = 1;
    int parallelism = 1;
    ScoreMode score_mode = ScoreMode::Both;
    int image_width = 256;
    int image_height = 256;
    StyleSchedule style;
    std::optional<std::string> style_ref;
    std::size_t max_instances = kDefaultMaxInstances;
    int proposer_retries = 2;
    std::chrono::milliseconds timeout = kDefaultBackendTimeout;

    /// Throws ConfigError.
    void validate() const;
    std::size_t refiner_index() const { return refiner.value_or(detectors.size() >= 2 ? 1 : 0); }
};

/// Parses the key = value config format. Relative paths resolve against
/// `base_dir`. Unknown keys are errors.
PipelineConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Layout request for image `index`: instance count uniform over the
/// configured range, categories uniform with replacement.
LayoutRequest sample_request(const PipelineConfig& config, std::size_t index);

struct ImageRecord {
    std::size_t index = 0;
    bool emitted = false;
    std::optional<Layout> layout;  // final adjusted layout of the last attempt
    std::optional<std::size_t> selected;
    double quality = 0.0;
    double position = 0.0;
    std::size_t accepted_candidates = 0;
    std::size_t attempted_candidates = 0;
    int regenerations = 0;
    std::string image_file;  // relative to the output directory
};

struct RunReport {
    std::vector<ImageRecord> images;  // index order; interrupted images absent
    std::size_t attempted = 0;
    std::size_t emitted = 0;
    std::size_t abandoned = 0;
    std::size_t candidate_attempts = 0;
    bool partial = false;
    std::string abort_reason;
    double wall_seconds = 0.0;  // not written to the report file
};

/// Report file contents: deterministic, so no timing.
std::string serialize_report(const RunReport& report);

/// Connected backend clients for one worker.
struct WorkerBackends {
    std::unique_ptr<BackendClient> proposer;
    std::unique_ptr<BackendClient> generator;
    std::vector<std::unique_ptr<BackendClient>> detectors;
    std::unique_ptr<BackendClient> scorer;
};

std::unique_ptr<BackendClient> connect_backend(const std::string& spec, protocol::Role role,
                                               const std::string& name,
                                               std::chrono::milliseconds timeout);

/// Starts and handshakes every backend of one worker. Throws ConfigError
/// or BackendError.
WorkerBackends connect_worker(const PipelineConfig& config);

/// Handshakes, schema and prerequisite checks without generating anything.
void validate_setup(const PipelineConfig& config);

/// Runs the whole pipeline and writes the output tree. Throws ConfigError or
/// BackendError on startup failure; a backend failure mid-run yields a
/// report with `partial` set.
RunReport run_pipeline(const PipelineConfig& config);

}  // namespace lsynth
