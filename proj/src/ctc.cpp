// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/ctc.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "iadapt/error.hpp"

namespace iadapt::ctc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lse2(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = a > b ? a : b;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace

std::size_t repeats(std::span<const Label> labels) {
    std::size_t r = 0;
    for (std::size_t i = 1; i < labels.size(); ++i) {
        if (labels[i] == labels[i - 1]) ++r;
    }
    return r;
}

std::size_t min_frames(std::span<const Label> labels) {
    return labels.size() + repeats(labels);
}

ForwardBackward forward_backward(const num::Tensor& log_probs, std::span<const Label> labels) {
    if (!(log_probs.rank() == 2)) {
        fail(ErrorKind::shape_mismatch, "ctc expects a (T, vocab+1) table, got " + num::shape_string(log_probs.shape()));
    }
    const std::size_t T = log_probs.rows();
    const std::size_t C = log_probs.cols();
    require(C >= 2, ErrorKind::shape_mismatch, "ctc table needs at least one symbol plus blank");
    const Label blank = static_cast<Label>(C - 1);
    for (Label l : labels) {
        if (!(l >= 0 && l < blank)) {
            fail(ErrorKind::invalid_argument, "label " + std::to_string(l) + " outside [0, " + std::to_string(blank) + ")");
        }
    }
    if (!(T >= min_frames(labels))) {
        fail(ErrorKind::infeasible_alignment, std::to_string(labels.size()) + " labels need at least " + std::to_string(min_frames(labels)) + " frames, got " + std::to_string(T));
    }

    // Extended sequence: blank, l0, blank, l1, ..., blank.
    const std::size_t S = 2 * labels.size() + 1;
    std::vector<Label> ext(S, blank);
    for (std::size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];

    auto lp = [&](std::size_t t, std::size_t s) { return log_probs.at(t, static_cast<std::size_t>(ext[s])); };
    auto can_skip = [&](std::size_t s) { return s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]; };

    std::vector<double> alpha(T * S, kNegInf), beta(T * S, kNegInf);
    alpha[0] = lp(0, 0);
    if (S > 1) alpha[1] = lp(0, 1);
    for (std::size_t t = 1; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            double a = alpha[(t - 1) * S + s];
            if (s >= 1) a = lse2(a, alpha[(t - 1) * S + s - 1]);
            if (can_skip(s)) a = lse2(a, alpha[(t - 1) * S + s - 2]);
            alpha[t * S + s] = a == kNegInf ? kNegInf : a + lp(t, s);
        }
    }
    beta[(T - 1) * S + S - 1] = lp(T - 1, S - 1);
    if (S > 1) beta[(T - 1) * S + S - 2] = lp(T - 1, S - 2);
    for (std::size_t t = T - 1; t-- > 0;) {
        for (std::size_t s = 0; s < S; ++s) {
            double b = beta[(t + 1) * S + s];
            if (s + 1 < S) b = lse2(b, beta[(t + 1) * S + s + 1]);
            if (s + 2 < S && ext[s + 2] != blank && ext[s + 2] != ext[s]) b = lse2(b, beta[(t + 1) * S + s + 2]);
            beta[t * S + s] = b == kNegInf ? kNegInf : b + lp(t, s);
        }
    }

    const double fwd = S > 1 ? lse2(alpha[(T - 1) * S + S - 1], alpha[(T - 1) * S + S - 2]) : alpha[(T - 1) * S];
    const double bwd = S > 1 ? lse2(beta[0], beta[1]) : beta[0];
    require(std::isfinite(fwd), ErrorKind::infeasible_alignment, "every alignment has zero probability");

    ForwardBackward out;
    out.loss = -fwd;
    out.forward_log_prob = fwd;
    out.backward_log_prob = bwd;
    out.grad = num::Tensor({T, C}, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t s = 0; s < S; ++s) {
            const double a = alpha[t * S + s];
            const double b = beta[t * S + s];
            if (a == kNegInf || b == kNegInf) continue;
            // α and β both include the frame-t emission, so subtract it once.
            const double occupancy = std::exp(a + b - lp(t, s) - fwd);
            out.grad.at(t, static_cast<std::size_t>(ext[s])) -= occupancy;
        }
    }
    return out;
}

double loss(const num::Tensor& log_probs, std::span<const Label> labels) {
    return forward_backward(log_probs, labels).loss;
}

num::Var loss(num::Tape& tape, num::Var log_probs, std::span<const Label> labels) {
    ForwardBackward fb = forward_backward(tape.value(log_probs), labels);
    const num::Var in[] = {log_probs};
    return tape.record(num::Tensor::scalar(fb.loss), in,
                       [log_probs, grad = std::move(fb.grad)](num::Tape& t, const num::Tensor& g) {
                           t.grad_sink(log_probs)->axpy_inplace(g[0], grad);
                       });
}

LabelSequence greedy_decode(const num::Tensor& log_probs) {
    const std::size_t C = log_probs.cols();
    const Label blank = static_cast<Label>(C - 1);
    LabelSequence out;
    Label prev = -1;
    for (std::size_t t = 0; t < log_probs.rows(); ++t) {
        auto row = log_probs.row(t);
        std::size_t best = 0;
        for (std::size_t k = 1; k < C; ++k) {
            if (row[k] > row[best]) best = k;
        }
        const Label sym = static_cast<Label>(best);
        if (sym != prev && sym != blank) out.push_back(sym);
        prev = sym;
    }
    return out;
}

}  // namespace iadapt::ctc
