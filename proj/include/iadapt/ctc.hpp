// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// CTC loss over a (T, vocab+1) table of per-frame log-probabilities. The blank
// symbol is always the last column (index == vocab_size).

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iadapt/tape.hpp"
#include "iadapt/tensor.hpp"

namespace iadapt::ctc {

using Label = int;
using LabelSequence = std::vector<Label>;

// Number of adjacent equal labels; each forces an extra blank frame.
std::size_t repeats(std::span<const Label> labels);

// Minimum number of frames that can emit `labels`.
std::size_t min_frames(std::span<const Label> labels);

struct ForwardBackward {
    double loss = 0.0;               // −log p(labels | x)
    double forward_log_prob = 0.0;   // from the α recursion
    double backward_log_prob = 0.0;  // from the β recursion
    num::Tensor grad;                // ∂loss/∂log_probs, same shape as the input
};

// Full α/β dynamic program in log space. Throws infeasible_alignment when the
// table is too short for the target (or every path has zero probability).
ForwardBackward forward_backward(const num::Tensor& log_probs, std::span<const Label> labels);

double loss(const num::Tensor& log_probs, std::span<const Label> labels);

// Differentiable op: records the loss on the tape with gradient −γ.
num::Var loss(num::Tape& tape, num::Var log_probs, std::span<const Label> labels);

// Per-frame argmax (ties to the lower index), collapse repeats, drop blanks.
LabelSequence greedy_decode(const num::Tensor& log_probs);

}  // namespace iadapt::ctc
