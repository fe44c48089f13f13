// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iadapt/tape.hpp"
#include "iadapt/tensor.hpp"

namespace iadapt {

using num::GradientMap;
using num::ParamId;
using num::Tensor;

// Partition tags for θ = θ_s ∪ θ_a ∪ θ_d. The CTC head is the part of θ_d
// that gets replaced when the output alphabet changes.
enum class ParamGroup { backbone, adapter, downstream_body, ctc_head };

std::string_view to_string(ParamGroup group);
ParamGroup parse_param_group(std::string_view text);

struct Parameter {
    std::string name;
    ParamGroup group = ParamGroup::backbone;
    Tensor value;
    bool trainable = false;
};

class ParamStore {
public:
    ParamId add(std::string name, ParamGroup group, Tensor value, bool trainable);

    std::size_t size() const noexcept { return params_.size(); }
    Parameter& operator[](ParamId id) { return params_.at(id); }
    const Parameter& operator[](ParamId id) const { return params_.at(id); }

    std::optional<ParamId> find(std::string_view name) const;

    auto begin() noexcept { return params_.begin(); }
    auto end() noexcept { return params_.end(); }
    auto begin() const noexcept { return params_.begin(); }
    auto end() const noexcept { return params_.end(); }

    void set_trainable(ParamGroup group, bool trainable);
    void freeze_all();

    std::size_t count(ParamGroup group) const;
    std::size_t count_trainable() const;
    std::size_t count_total() const;

    // Bit-level hash over all tensors of one group, in registration order.
    std::uint64_t hash(ParamGroup group) const;

    // Registers a parameter on the tape honouring its trainable flag.
    num::Var bind(num::Tape& tape, ParamId id) const;

    // Snapshot/restore of trainable values (used by the inner loop of FOMAML).
    std::vector<Tensor> snapshot_trainable() const;
    void restore_trainable(const std::vector<Tensor>& values);

private:
    std::vector<Parameter> params_;
};

}  // namespace iadapt
