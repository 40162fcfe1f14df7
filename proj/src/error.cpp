// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/error.hpp"

namespace lsynth {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
    std::string out = "layout validation failed:";
    for (const auto& s : v) {
        out += " [" + s + "]";
    }
    return out;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error(join_violations(violations)), violations_(std::move(violations)) {}

const char* to_string(BackendErrorKind kind) noexcept {
    switch (kind) {
        case BackendErrorKind::Timeout: return "timeout";
        case BackendErrorKind::MalformedReply: return "malformed reply";
        case BackendErrorKind::RoleMismatch: return "role mismatch";
        case BackendErrorKind::BackendStatus: return "backend status";
        case BackendErrorKind::Io: return "io";
    }
    return "unknown";
}

BackendError::BackendError(BackendErrorKind kind, const std::string& what, std::string raw)
    : Error(std::string(to_string(kind)) + ": " + what), kind_(kind), raw_(std::move(raw)) {}

}  // namespace lsynth
