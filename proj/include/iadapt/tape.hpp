// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode gradient tape. Every differentiable op appends a node holding
// its forward value and a closure that pushes the node's gradient to its
// inputs. Leaves registered as frozen parameters never require a gradient, so
// backward() produces no accumulator for them at all.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "iadapt/tensor.hpp"

namespace iadapt::num {

using ParamId = std::size_t;
using GradientMap = std::map<ParamId, Tensor>;

class Tape;

// Handle to a value recorded on a specific tape.
struct Var {
    std::uint32_t index = 0;
};

using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

class Tape {
public:
    Tape() = default;
    // With gradients disabled every leaf is recorded as a constant, so a
    // forward pass keeps no closures (evaluation only).
    explicit Tape(bool grad_enabled) : grad_enabled_(grad_enabled) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves.
    Var constant(Tensor value);
    Var input(Tensor value, bool requires_grad);
    // References `value` without copying; it must outlive the tape's use.
    Var parameter(ParamId id, const Tensor& value, bool trainable);

    // Differentiable ops.
    Var matmul(Var a, Var b);
    Var matmul_nt(Var a, Var b);
    Var linear(Var x, Var weight, Var bias);
    Var add(Var a, Var b);
    Var add_bias(Var x, Var bias);
    Var scale(Var x, double s);
    Var mul(Var a, Var b);
    Var relu(Var x);
    Var gelu(Var x);
    Var softmax(Var x);
    Var log_softmax(Var x);
    Var layer_norm(Var x);
    Var layer_norm(Var x, Var gamma, Var beta);
    Var embedding(Var table, std::vector<std::size_t> ids);
    Var slice_rows(Var x, std::size_t begin, std::size_t end);
    Var slice_cols(Var x, std::size_t begin, std::size_t end);
    Var concat_cols(std::span<const Var> parts);
    Var sum(Var x);
    Var mean(Var x);

    // Extension point for ops defined elsewhere (e.g. the CTC loss).
    Var record(Tensor value, std::span<const Var> inputs, BackwardFn backward);

    const Tensor& value(Var v) const;
    bool requires_grad(Var v) const;

    // Gradient accumulator for `v`, zero-initialised on first use; nullptr
    // when `v` does not require a gradient.
    Tensor* grad_sink(Var v);

    GradientMap backward(Var loss);

    void clear();
    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t backward_visits() const noexcept { return backward_visits_; }

private:
    struct Node {
        Tensor value;
        const Tensor* external = nullptr;
        Tensor grad;
        bool has_grad = false;
        bool requires_grad = false;
        std::optional<ParamId> param;
        BackwardFn backward;
    };

    Var push(Node node);
    Node& node(Var v);
    const Node& node(Var v) const;
    bool any_requires(std::span<const Var> inputs) const;

    std::vector<Node> nodes_;
    std::size_t backward_visits_ = 0;
    bool grad_enabled_ = true;
};

}  // namespace iadapt::num
