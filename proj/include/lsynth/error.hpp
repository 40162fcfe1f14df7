// Copyright (C) 2026 The lsynth Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lsynth {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document. The message names the offending record.
class ParseError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A caller broke an operation's precondition (e.g. timestep out of range).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// A layout failed validation; `violations` lists each broken rule.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> violations);

    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class UnknownCategory : public Error {
public:
    explicit UnknownCategory(const std::string& name)
        : Error("unknown category: " + name), name_(name) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

/// A requested annotation format whose prerequisite payload is missing.
class UnavailableAnnotation : public Error {
public:
    explicit UnavailableAnnotation(const std::string& format)
        : Error("unavailable annotation: " + format + " requested but no payload was provided"),
          format_(format) {}

    const std::string& format() const noexcept { return format_; }

private:
    std::string format_;
};

enum class BackendErrorKind { Timeout, MalformedReply, RoleMismatch, BackendStatus, Io };

const char* to_string(BackendErrorKind kind) noexcept;

/// Failure talking to an external model backend. Carries the raw payload
/// (reply line, or request line when nothing came back).
class BackendError : public Error {
public:
    BackendError(BackendErrorKind kind, const std::string& what, std::string raw = {});

    BackendErrorKind kind() const noexcept { return kind_; }
    const std::string& raw() const noexcept { return raw_; }

private:
    BackendErrorKind kind_;
    std::string raw_;
};

}  // namespace lsynth
