// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/params.hpp"

#include "iadapt/error.hpp"

namespace iadapt {

std::string_view to_string(ParamGroup group) {
    switch (group) {
        case ParamGroup::backbone: return "backbone";
        case ParamGroup::adapter: return "adapter";
        case ParamGroup::downstream_body: return "downstream_body";
        case ParamGroup::ctc_head: return "ctc_head";
    }
    return "?";
}

ParamGroup parse_param_group(std::string_view text) {
    if (text == "backbone") return ParamGroup::backbone;
    if (text == "adapter") return ParamGroup::adapter;
    if (text == "downstream_body") return ParamGroup::downstream_body;
    if (text == "ctc_head") return ParamGroup::ctc_head;
    fail(ErrorKind::format, "unknown parameter group '" + std::string(text) + "'");
}

ParamId ParamStore::add(std::string name, ParamGroup group, Tensor value, bool trainable) {
    if (!(!find(name))) {
        fail(ErrorKind::invalid_argument, "duplicate parameter name " + name);
    }
    params_.push_back(Parameter{std::move(name), group, std::move(value), trainable});
    return params_.size() - 1;
}

std::optional<ParamId> ParamStore::find(std::string_view name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return i;
    }
    return std::nullopt;
}

void ParamStore::set_trainable(ParamGroup group, bool trainable) {
    for (Parameter& p : params_) {
        if (p.group == group) p.trainable = trainable;
    }
}

void ParamStore::freeze_all() {
    for (Parameter& p : params_) p.trainable = false;
}

std::size_t ParamStore::count(ParamGroup group) const {
    std::size_t n = 0;
    for (const Parameter& p : params_) {
        if (p.group == group) n += p.value.size();
    }
    return n;
}

std::size_t ParamStore::count_trainable() const {
    std::size_t n = 0;
    for (const Parameter& p : params_) {
        if (p.trainable) n += p.value.size();
    }
    return n;
}

std::size_t ParamStore::count_total() const {
    std::size_t n = 0;
    for (const Parameter& p : params_) n += p.value.size();
    return n;
}

std::uint64_t ParamStore::hash(ParamGroup group) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Parameter& p : params_) {
        if (p.group == group) h = num::hash_bytes(p.value, h);
    }
    return h;
}

num::Var ParamStore::bind(num::Tape& tape, ParamId id) const {
    const Parameter& p = params_.at(id);
    return tape.parameter(id, p.value, p.trainable);
}

std::vector<Tensor> ParamStore::snapshot_trainable() const {
    std::vector<Tensor> out;
    for (const Parameter& p : params_) {
        if (p.trainable) out.push_back(p.value);
    }
    return out;
}

void ParamStore::restore_trainable(const std::vector<Tensor>& values) {
    std::size_t k = 0;
    for (Parameter& p : params_) {
        if (!p.trainable) continue;
        require(k < values.size() && values[k].shape() == p.value.shape(), ErrorKind::shape_mismatch,
                "restore_trainable snapshot does not match store");
        p.value = values[k++];
    }
    require(k == values.size(), ErrorKind::shape_mismatch, "restore_trainable snapshot has extra tensors");
}

}  // namespace iadapt
