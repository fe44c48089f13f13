// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/optim.hpp"

#include <cmath>
#include <string>

#include "iadapt/error.hpp"

namespace iadapt::optim {

std::string_view to_string(Kind kind) {
    return kind == Kind::sgd ? "sgd" : "adam";
}

Kind parse_kind(std::string_view text) {
    if (text == "sgd") return Kind::sgd;
    if (text == "adam") return Kind::adam;
    fail(ErrorKind::invalid_config, "unknown optimizer '" + std::string(text) + "'");
}

Optimizer::Optimizer(double lr) : lr_(lr) {
    require(lr >= 0 && std::isfinite(lr), ErrorKind::invalid_config, "learning rate must be finite and >= 0");
}

namespace {

Parameter& target(ParamStore& params, ParamId id, const Tensor& grad) {
    if (!(id < params.size())) {
        fail(ErrorKind::invalid_argument, "gradient for unknown parameter " + std::to_string(id));
    }
    Parameter& p = params[id];
    if (!(p.trainable)) {
        fail(ErrorKind::invalid_argument, "gradient for frozen parameter " + p.name);
    }
    if (!(p.value.shape() == grad.shape())) {
        fail(ErrorKind::shape_mismatch, "gradient shape mismatch for " + p.name);
    }
    return p;
}

}  // namespace

Sgd::Sgd(double lr) : Optimizer(lr) {}

void Sgd::step(ParamStore& params, const GradientMap& grads) {
    for (const auto& [id, g] : grads) target(params, id, g).value.axpy_inplace(-lr_, g);
    ++steps_;
}

Adam::Adam(double lr, AdamConstants constants) : Optimizer(lr), c_(constants) {
    require(c_.beta1 >= 0 && c_.beta1 < 1 && c_.beta2 >= 0 && c_.beta2 < 1 && c_.eps > 0, ErrorKind::invalid_config,
            "Adam constants out of range");
}

void Adam::step(ParamStore& params, const GradientMap& grads) {
    ++steps_;
    const double t = static_cast<double>(steps_);
    const double c1 = 1.0 - std::pow(c_.beta1, t);
    const double c2 = 1.0 - std::pow(c_.beta2, t);
    for (const auto& [id, g] : grads) {
        Parameter& p = target(params, id, g);
        auto m = m_.try_emplace(id, Tensor(g.shape(), 0.0)).first->second.data();
        auto v = v_.try_emplace(id, Tensor(g.shape(), 0.0)).first->second.data();
        auto w = p.value.data();
        const auto gd = g.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = c_.beta1 * m[i] + (1.0 - c_.beta1) * gd[i];
            v[i] = c_.beta2 * v[i] + (1.0 - c_.beta2) * gd[i] * gd[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            w[i] -= lr_ * mhat / (std::sqrt(vhat) + c_.eps);
        }
    }
}

const Tensor* Adam::first_moment(ParamId id) const {
    const auto it = m_.find(id);
    return it == m_.end() ? nullptr : &it->second;
}

const Tensor* Adam::second_moment(ParamId id) const {
    const auto it = v_.find(id);
    return it == v_.end() ? nullptr : &it->second;
}

std::unique_ptr<Optimizer> make(Kind kind, double lr) {
    if (kind == Kind::sgd) return std::make_unique<Sgd>(lr);
    return std::make_unique<Adam>(lr);
}

}  // namespace iadapt::optim
