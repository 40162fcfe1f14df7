// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace lsynth {

/// A generated image on disk.
struct CandidateImage {
    std::string path;
    int width = 0;
    int height = 0;
    std::string generator;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument on empty path or non-positive size.
    void validate() const;

    friend bool operator==(const CandidateImage&, const CandidateImage&) = default;
};

}  // namespace lsynth
