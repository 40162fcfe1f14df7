// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "lsynth/protocol.hpp"

namespace lsynth {

inline constexpr std::chrono::milliseconds kDefaultBackendTimeout{120'000};

/// Environment variable naming a file that receives every protocol line
/// sent or received, as JSON records, for later conformance replay.
inline constexpr const char* kTranscriptEnv = "ANYSYNTH_BACKEND_LOG";

/// Carries one request line to a backend and returns the next reply line.
class Endpoint {
public:
    virtual ~Endpoint() = default;

    virtual void send_line(const std::string& line) = 0;
    /// Throws BackendError(Timeout) when no full line arrives in time and
    /// BackendError(Io) when the backend went away.
    virtual std::string read_line(std::chrono::milliseconds timeout) = 0;
};

/// A backend running as a child process, spoken to over its stdin/stdout.
/// The command is run by /bin/sh.
class ProcessEndpoint final : public Endpoint {
public:
    explicit ProcessEndpoint(const std::string& command);
    ~ProcessEndpoint() override;

    ProcessEndpoint(const ProcessEndpoint&) = delete;
    ProcessEndpoint& operator=(const ProcessEndpoint&) = delete;

    void send_line(const std::string& line) override;
    std::string read_line(std::chrono::milliseconds timeout) override;

    int pid() const noexcept { return pid_; }

private:
    void reap();

    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string buffer_;
};

/// Request handler on the backend side of the protocol.
class Server {
public:
    virtual ~Server() = default;

    /// Returns the reply line for one request line. Never throws: failures
    /// become error replies.
    virtual std::string handle_line(const std::string& line) = 0;

    /// True once a shutdown request was answered.
    virtual bool finished() const = 0;
};

/// Runs `server` over line streams until shutdown or end of input.
void serve(Server& server, std::istream& in, std::ostream& out);

/// In-process endpoint: hands each line straight to a Server.
class LoopbackEndpoint final : public Endpoint {
public:
    explicit LoopbackEndpoint(std::unique_ptr<Server> server) : server_(std::move(server)) {}

    void send_line(const std::string& line) override;
    std::string read_line(std::chrono::milliseconds timeout) override;

private:
    std::unique_ptr<Server> server_;
    std::vector<std::string> pending_;
};

/// Engine-side client for one backend process. Not thread-safe: one request
/// in flight at a time; run several clients for parallelism.
class BackendClient {
public:
    BackendClient(std::unique_ptr<Endpoint> endpoint, protocol::Role expected, std::string name,
                  std::chrono::milliseconds timeout = kDefaultBackendTimeout);
    ~BackendClient();

    BackendClient(BackendClient&&) noexcept;
    BackendClient& operator=(BackendClient&&) noexcept;

    /// Sends hello and checks the declared role and version.
    const protocol::Hello& handshake();
    bool ready() const noexcept { return hello_.has_value(); }
    const protocol::Hello& hello() const;

    /// Sends one request and returns the validated "ok" reply. Error kinds:
    /// Timeout, MalformedReply (bad JSON, schema or id), RoleMismatch (op not
    /// served by the declared role), BackendStatus (status "error").
    nlohmann::json call(protocol::Op op, nlohmann::json payload);

    Layout propose(const LayoutRequest& request);
    CandidateImage generate(const protocol::GenerationRequest& request);
    /// Detections stamped with this backend's name. Replies naming a category
    /// outside `vocabulary` are rejected as malformed.
    std::vector<Detection> detect(const std::string& image, const std::vector<std::string>& vocabulary);
    /// Score normalized into [0,1] through the declared score range.
    double score(const std::string& image);
    void shutdown();

    const std::string& name() const noexcept { return name_; }

private:
    std::unique_ptr<Endpoint> endpoint_;
    protocol::Role expected_;
    std::string name_;
    std::chrono::milliseconds timeout_;
    std::uint64_t next_id_ = 1;
    std::optional<protocol::Hello> hello_;
    bool shut_down_ = false;
};

}  // namespace lsynth
