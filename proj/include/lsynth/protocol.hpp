// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lsynth/candidate.hpp"
#include "lsynth/filtering.hpp"
#include "lsynth/layout.hpp"

// Newline-delimited JSON protocol between the engine and model backends.
// Every request is {"id": n, "op": "...", ...}; every reply echoes the id and
// carries "status": "ok" or "error". docs/protocol.md has the field tables.
namespace lsynth::protocol {

inline constexpr std::string_view kVersion = "1";

enum class Role { Proposer, Generator, Detector, Scorer };

std::string_view to_string(Role role);
Role parse_role(std::string_view s);

enum class Op { Hello, ProposeLayout, Generate, Detect, Score, Shutdown };

std::string_view to_string(Op op);
std::optional<Op> parse_op(std::string_view s);

/// Role that must have been declared to serve `op`; nullopt for ops every
/// backend answers (hello, shutdown).
std::optional<Role> role_for(Op op);

struct GenerationRequest {
    Layout layout;
    std::optional<std::string> style_ref;
    std::map<int, std::string> instance_refs;  // instance id -> reference image
    std::uint64_t seed = 0;
    std::vector<std::pair<int, double>> style_schedule;
    std::string output_path;  // where the backend writes the image
    int width = 256;
    int height = 256;

    /// Throws ContractViolation when an invariant does not hold.
    void validate() const;

    friend bool operator==(const GenerationRequest&, const GenerationRequest&) = default;
};

struct Hello {
    Role role = Role::Generator;
    std::string version{kVersion};
    std::string name;
    std::optional<std::pair<double, double>> score_range;
};

// ---- codecs ------------------------------------------------------------------

nlohmann::json encode(const GenerationRequest& r);
GenerationRequest decode_generation_request(const nlohmann::json& j,
                                            const std::string& ctx = "request");

nlohmann::json encode(const CandidateImage& image);
CandidateImage decode_candidate_image(const nlohmann::json& j, const std::string& ctx = "image");

/// Wire detections carry no detector id; the client stamps it.
nlohmann::json encode(const Detection& d);
Detection decode_detection(const nlohmann::json& j, const std::string& ctx);

nlohmann::json encode(const Hello& h);
Hello decode_hello(const nlohmann::json& j);

// ---- schema validation -----------------------------------------------------

/// Problems with a request message; empty when it conforms.
std::vector<std::string> validate_request(const nlohmann::json& msg);

/// Problems with a reply to `op`; empty when it conforms. An error reply
/// (status "error" with a message) conforms.
std::vector<std::string> validate_reply(Op op, const nlohmann::json& msg);

nlohmann::json ok_reply(std::uint64_t id);
nlohmann::json error_reply(std::uint64_t id, const std::string& message);

}  // namespace lsynth::protocol
