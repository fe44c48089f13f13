// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iadapt {

enum class ErrorKind {
    invalid_argument,
    invalid_node,
    unknown_code,
    invalid_tree,
    insufficient_candidates,
    shape_mismatch,
    not_scalar,
    not_on_tape,
    infeasible_alignment,
    invalid_config,
    io,
    format,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) {
        fail(kind, message);
    }
}

}  // namespace iadapt
