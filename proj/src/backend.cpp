// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#include "lsynth/backend.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "lsynth/error.hpp"
#include "lsynth/layout_json.hpp"
#include "lsynth/text.hpp"

extern char** environ;

namespace lsynth {

using nlohmann::json;
using protocol::Op;
using protocol::Role;

namespace {

std::mutex g_transcript_mutex;

void record(const std::string& backend, const char* dir, const std::string& line) {
    const char* path = std::getenv(kTranscriptEnv);
    if (path == nullptr || *path == '\0') return;
    const json rec = {{"backend", backend}, {"dir", dir}, {"line", line}};
    std::lock_guard lock(g_transcript_mutex);
    std::ofstream out(path, std::ios::app);
    out << rec.dump() << '\n';
}

void ignore_sigpipe_once() {
    static std::once_flag flag;
    std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

// ---- ProcessEndpoint ---------------------------------------------------------

ProcessEndpoint::ProcessEndpoint(const std::string& command) {
    ignore_sigpipe_once();
    int to[2];
    int from[2];
    if (::pipe2(to, O_CLOEXEC) != 0) throw BackendError(BackendErrorKind::Io, std::strerror(errno));
    if (::pipe2(from, O_CLOEXEC) != 0) {
        ::close(to[0]);
        ::close(to[1]);
        throw BackendError(BackendErrorKind::Io, std::strerror(errno));
    }

    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, to[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, from[1], STDOUT_FILENO);

    // Own process group, so a stuck shell pipeline can be killed whole.
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);

    const char* argv[] = {"sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid_, "/bin/sh", &actions, &attr, const_cast<char* const*>(argv), environ);
    posix_spawn_file_actions_destroy(&actions);
    posix_spawnattr_destroy(&attr);
    ::close(to[0]);
    ::close(from[1]);
    if (rc != 0) {
        ::close(to[1]);
        ::close(from[0]);
        throw BackendError(BackendErrorKind::Io, "cannot spawn '" + command + "': " + std::strerror(rc));
    }
    to_child_ = to[1];
    from_child_ = from[0];
}

ProcessEndpoint::~ProcessEndpoint() {
    if (to_child_ >= 0) ::close(to_child_);
    reap();
    if (from_child_ >= 0) ::close(from_child_);
}

void ProcessEndpoint::reap() {
    if (pid_ <= 0) return;
    using namespace std::chrono;
    const auto deadline = steady_clock::now() + seconds(2);
    int status = 0;
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
        if (steady_clock::now() > deadline) {
            ::kill(-pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
            break;
        }
        std::this_thread::sleep_for(milliseconds(5));
    }
    pid_ = -1;
}

void ProcessEndpoint::send_line(const std::string& line) {
    std::string data = line + "\n";
    const char* p = data.data();
    std::size_t left = data.size();
    while (left > 0) {
        const ssize_t n = ::write(to_child_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError(BackendErrorKind::Io, std::string("write failed: ") + std::strerror(errno), line);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
}

std::string ProcessEndpoint::read_line(std::chrono::milliseconds timeout) {
    using namespace std::chrono;
    const auto deadline = steady_clock::now() + timeout;
    while (true) {
        if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            return line;
        }
        const auto left = duration_cast<milliseconds>(deadline - steady_clock::now()).count();
        if (left <= 0) throw BackendError(BackendErrorKind::Timeout, "no reply within timeout", buffer_);
        pollfd pfd{from_child_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left, 1 << 30)));
        if (r < 0) {
            if (errno == EINTR) continue;
            throw BackendError(BackendErrorKind::Io, std::string("poll failed: ") + std::strerror(errno));
        }
        if (r == 0) continue;
        char chunk[4096];
        const ssize_t n = ::read(from_child_, chunk, sizeof(chunk));
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError(BackendErrorKind::Io, std::string("read failed: ") + std::strerror(errno));
        }
        if (n == 0) throw BackendError(BackendErrorKind::Io, "backend exited", buffer_);
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

// ---- Server side -----------------------------------------------------------------

void serve(Server& server, std::istream& in, std::ostream& out) {
    std::string line;
    while (!server.finished() && std::getline(in, line)) {
        if (trim(line).empty()) continue;
        out << server.handle_line(line) << '\n' << std::flush;
    }
}

void LoopbackEndpoint::send_line(const std::string& line) {
    if (server_->finished()) throw BackendError(BackendErrorKind::Io, "backend exited", line);
    pending_.push_back(server_->handle_line(line));
}

std::string LoopbackEndpoint::read_line(std::chrono::milliseconds) {
    if (pending_.empty()) throw BackendError(BackendErrorKind::Timeout, "no reply pending");
    std::string line = std::move(pending_.front());
    pending_.erase(pending_.begin());
    return line;
}

// ---- BackendClient -----------------------------------------------------------------

BackendClient::BackendClient(std::unique_ptr<Endpoint> endpoint, Role expected, std::string name,
                             std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), expected_(expected), name_(std::move(name)), timeout_(timeout) {}

BackendClient::BackendClient(BackendClient&&) noexcept = default;
BackendClient& BackendClient::operator=(BackendClient&&) noexcept = default;

BackendClient::~BackendClient() {
    if (endpoint_ && hello_ && !shut_down_) {
        try {
            timeout_ = std::chrono::milliseconds(2000);
            shutdown();
        } catch (const std::exception&) {
        }
    }
}

const protocol::Hello& BackendClient::hello() const {
    if (!hello_) throw ContractViolation("backend '" + name_ + "' used before handshake");
    return *hello_;
}

const protocol::Hello& BackendClient::handshake() {
    const auto reply = call(Op::Hello, {{"version", std::string(protocol::kVersion)}});
    auto h = protocol::decode_hello(reply);
    if (h.role != expected_) {
        throw BackendError(BackendErrorKind::RoleMismatch,
                           "backend '" + name_ + "' declared role " + std::string(to_string(h.role)) +
                               ", expected " + std::string(to_string(expected_)),
                           reply.dump());
    }
    if (h.version != protocol::kVersion) {
        throw BackendError(BackendErrorKind::MalformedReply,
                           "backend '" + name_ + "' speaks protocol version " + h.version, reply.dump());
    }
    if (h.name.empty()) h.name = name_;
    hello_ = std::move(h);
    return *hello_;
}

json BackendClient::call(Op op, json payload) {
    if (op != Op::Hello && !hello_) handshake();
    if (auto role = protocol::role_for(op); role && hello_ && *role != hello_->role) {
        throw BackendError(BackendErrorKind::RoleMismatch,
                           "backend '" + name_ + "' (" + std::string(to_string(hello_->role)) +
                               ") cannot serve " + std::string(to_string(op)));
    }
    const std::uint64_t id = next_id_++;
    json msg = payload.is_object() ? std::move(payload) : json::object();
    msg["id"] = id;
    msg["op"] = std::string(to_string(op));
    if (auto problems = protocol::validate_request(msg); !problems.empty()) {
        throw ContractViolation("outgoing " + std::string(to_string(op)) + " request invalid: " + problems.front());
    }

    const std::string line = msg.dump();
    record(name_, "send", line);
    endpoint_->send_line(line);

    using namespace std::chrono;
    const auto deadline = steady_clock::now() + timeout_;
    while (true) {
        const auto left = duration_cast<milliseconds>(deadline - steady_clock::now());
        if (left.count() <= 0) throw BackendError(BackendErrorKind::Timeout, "no reply within timeout", line);
        std::string raw;
        try {
            raw = endpoint_->read_line(left);
        } catch (const BackendError& e) {
            // With nothing received, the unanswered request is the payload.
            if (e.kind() == BackendErrorKind::Timeout && e.raw().empty()) {
                throw BackendError(BackendErrorKind::Timeout, "no reply within timeout", line);
            }
            throw;
        }
        record(name_, "recv", raw);
        json reply;
        try {
            reply = json::parse(raw);
        } catch (const json::parse_error&) {
            throw BackendError(BackendErrorKind::MalformedReply, "reply is not JSON", raw);
        }
        if (reply.is_object() && reply.contains("id") && json_codec::is_uint(reply["id"]) &&
            reply["id"].get<std::uint64_t>() < id) {
            continue;  // late reply to a request that already timed out
        }
        if (auto problems = protocol::validate_reply(op, reply); !problems.empty()) {
            throw BackendError(BackendErrorKind::MalformedReply, problems.front(), raw);
        }
        if (reply["id"].get<std::uint64_t>() != id) {
            throw BackendError(BackendErrorKind::MalformedReply, "reply id does not match request", raw);
        }
        if (reply["status"] == "error") {
            throw BackendError(BackendErrorKind::BackendStatus, reply["error"].get<std::string>(), raw);
        }
        return reply;
    }
}

Layout BackendClient::propose(const LayoutRequest& request) {
    const auto reply = call(Op::ProposeLayout, {{"request", json_codec::encode(request)}});
    return json_codec::decode_layout(reply["layout"], "reply.layout");
}

CandidateImage BackendClient::generate(const protocol::GenerationRequest& request) {
    const auto reply = call(Op::Generate, {{"request", protocol::encode(request)}});
    auto image = protocol::decode_candidate_image(reply["image"], "reply.image");
    if (image.generator.empty()) image.generator = hello().name;
    return image;
}

std::vector<Detection> BackendClient::detect(const std::string& image,
                                             const std::vector<std::string>& vocabulary) {
    const auto reply = call(Op::Detect, {{"image", image}, {"vocabulary", vocabulary}});
    std::vector<Detection> out;
    const auto& dets = reply["detections"];
    for (std::size_t i = 0; i < dets.size(); ++i) {
        auto d = protocol::decode_detection(dets[i], "reply.detections[" + std::to_string(i) + "]");
        const bool known = std::any_of(vocabulary.begin(), vocabulary.end(),
                                       [&](const std::string& v) { return iequals(v, d.cate); });
        if (!known) {
            throw BackendError(BackendErrorKind::MalformedReply,
                               "detection category '" + d.cate + "' is outside the requested vocabulary",
                               reply.dump());
        }
        d.detector = hello().name;
        out.push_back(std::move(d));
    }
    return out;
}

double BackendClient::score(const std::string& image) {
    const auto reply = call(Op::Score, {{"image", image}});
    const auto range = hello().score_range.value_or(std::make_pair(0.0, 1.0));
    return normalize_score(reply["score"].get<double>(), range.first, range.second);
}

void BackendClient::shutdown() {
    if (shut_down_ || !hello_) return;
    shut_down_ = true;
    call(Op::Shutdown, json::object());
}

}  // namespace lsynth
