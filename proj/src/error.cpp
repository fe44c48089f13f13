// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/error.hpp"

namespace iadapt {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::invalid_argument: return "invalid argument";
        case ErrorKind::invalid_node: return "invalid node";
        case ErrorKind::unknown_code: return "unknown language code";
        case ErrorKind::invalid_tree: return "invalid tree";
        case ErrorKind::insufficient_candidates: return "insufficient candidates";
        case ErrorKind::shape_mismatch: return "shape mismatch";
        case ErrorKind::not_scalar: return "loss not scalar";
        case ErrorKind::not_on_tape: return "not on tape";
        case ErrorKind::infeasible_alignment: return "infeasible alignment";
        case ErrorKind::invalid_config: return "invalid config";
        case ErrorKind::io: return "i/o error";
        case ErrorKind::format: return "format error";
    }
    return "error";
}

}  // namespace iadapt
