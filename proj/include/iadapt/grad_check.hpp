// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "iadapt/params.hpp"
#include "iadapt/tape.hpp"

namespace iadapt::num {

struct GradCheckOptions {
    double tolerance = 1e-4;
    double step = 1e-5;
    // Fourth-order stencil (four evaluations per entry) instead of the
    // two-point central difference.
    bool five_point = false;
    // Denominator floor for the relative error, so entries whose true
    // gradient is ~0 are judged on absolute error instead.
    double floor = 1e-6;
    // 0 checks every entry; otherwise at most this many evenly spaced entries
    // per parameter tensor.
    std::size_t max_entries_per_param = 0;
    // Refuse fragments that are too large for an exhaustive check.
    std::size_t max_parameters = 10000;
};

struct GradCheckReport {
    bool passed = true;
    double worst_relative_error = 0.0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    std::size_t entries_checked = 0;
    std::size_t failures = 0;
};

// Builds a scalar loss on a fresh tape from the store's parameters.
using LossBuilder = std::function<Var(Tape&, const ParamStore&)>;

// Compares analytic gradients of every trainable parameter against central
// differences. The store is perturbed in place and restored bit-exactly.
GradCheckReport grad_check(ParamStore& store, const LossBuilder& loss, const GradCheckOptions& options = {});

}  // namespace iadapt::num
