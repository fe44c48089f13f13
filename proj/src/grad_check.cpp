// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "iadapt/error.hpp"

namespace iadapt::num {

namespace {

double evaluate(const ParamStore& store, const LossBuilder& loss) {
    Tape tape;
    const Var l = loss(tape, store);
    return tape.value(l)[0];
}

}  // namespace

GradCheckReport grad_check(ParamStore& store, const LossBuilder& loss, const GradCheckOptions& options) {
    if (options.max_entries_per_param == 0) {
        if (!(store.count_trainable() <= options.max_parameters)) {
            fail(ErrorKind::invalid_argument, "grad_check fragment has " + std::to_string(store.count_trainable()) + " trainable parameters; exhaustive checks are limited to " + std::to_string(options.max_parameters));
        }
    }

    GradientMap analytic;
    {
        Tape tape;
        const Var l = loss(tape, store);
        analytic = tape.backward(l);
    }

    GradCheckReport report;
    for (ParamId id = 0; id < store.size(); ++id) {
        Parameter& p = store[id];
        if (!p.trainable) continue;
        const auto it = analytic.find(id);
        const std::size_t n = p.value.size();
        const std::size_t stride =
            options.max_entries_per_param == 0 ? 1 : std::max<std::size_t>(1, n / options.max_entries_per_param);
        for (std::size_t i = 0; i < n; i += stride) {
            const double original = p.value[i];
            auto at = [&](double offset) {
                p.value[i] = original + offset;
                return evaluate(store, loss);
            };
            const double h = options.step;
            double numeric = 0.0;
            if (options.five_point) {
                numeric = (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0 * h);
            } else {
                numeric = (at(h) - at(-h)) / (2.0 * h);
            }
            p.value[i] = original;

            const double a = it == analytic.end() ? 0.0 : it->second[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), options.floor});
            const double rel = std::abs(a - numeric) / denom;
            ++report.entries_checked;
            if (rel > options.tolerance) {
                ++report.failures;
                report.passed = false;
            }
            if (rel > report.worst_relative_error || report.entries_checked == 1) {
                report.worst_relative_error = rel;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
                report.worst_param = p.name;
                report.worst_index = i;
            }
        }
    }
    return report;
}

}  // namespace iadapt::num
