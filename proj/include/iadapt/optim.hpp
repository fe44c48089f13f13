// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// SGD and Adam over the trainable entries of a ParamStore. Gradients arrive as
// a GradientMap; a parameter with no entry is left alone, so frozen tensors
// are never touched.

#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string_view>

#include "iadapt/params.hpp"

namespace iadapt::optim {

enum class Kind { sgd, adam };

std::string_view to_string(Kind kind);
Kind parse_kind(std::string_view text);

struct AdamConstants {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Optimizer {
public:
    virtual ~Optimizer() = default;
    virtual Kind kind() const noexcept = 0;
    virtual void step(ParamStore& params, const GradientMap& grads) = 0;
    virtual std::unique_ptr<Optimizer> clone() const = 0;

    double learning_rate() const noexcept { return lr_; }
    std::size_t steps() const noexcept { return steps_; }

protected:
    explicit Optimizer(double lr);
    double lr_;
    std::size_t steps_ = 0;
};

class Sgd final : public Optimizer {
public:
    explicit Sgd(double lr);
    Kind kind() const noexcept override { return Kind::sgd; }
    void step(ParamStore& params, const GradientMap& grads) override;
    std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Sgd>(*this); }
};

class Adam final : public Optimizer {
public:
    explicit Adam(double lr, AdamConstants constants = {});
    Kind kind() const noexcept override { return Kind::adam; }
    void step(ParamStore& params, const GradientMap& grads) override;
    std::unique_ptr<Optimizer> clone() const override { return std::make_unique<Adam>(*this); }

    const AdamConstants& constants() const noexcept { return c_; }
    // First/second moment for a parameter, or nullptr before its first update.
    const Tensor* first_moment(ParamId id) const;
    const Tensor* second_moment(ParamId id) const;

private:
    AdamConstants c_;
    std::map<ParamId, Tensor> m_;
    std::map<ParamId, Tensor> v_;
};

std::unique_ptr<Optimizer> make(Kind kind, double lr);

}  // namespace iadapt::optim
