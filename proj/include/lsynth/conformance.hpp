// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lsynth/backend.hpp"

namespace lsynth::conformance {

/// One request of a recorded exchange and the reply it got, if recorded.
struct Step {
    std::string request;
    std::optional<std::string> reply;
};

/// Reads a transcript in the capture format ({backend, dir, line} per
/// line). `$NAME` tokens in message lines are replaced from `vars`.
std::vector<Step> load_transcript(std::string_view text, const std::map<std::string, std::string>& vars = {});

/// Sends every step to `endpoint` and checks each reply: it must parse,
/// carry the request id, validate against the reply schema of the op, and
/// have the recorded status. Returns the violations found.
std::vector<std::string> replay(Endpoint& endpoint, const std::vector<Step>& steps,
                                std::chrono::milliseconds timeout = kDefaultBackendTimeout);

}  // namespace lsynth::conformance
