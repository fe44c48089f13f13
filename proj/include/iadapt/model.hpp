// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Toy encoder stack: a frozen transformer backbone (θ_s) with optional
// bottleneck adapters after each block's second feed-forward projection
// (θ_a), followed by a small transformer downstream model and CTC head (θ_d).

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iadapt/params.hpp"
#include "iadapt/tape.hpp"
#include "iadapt/tensor.hpp"

namespace iadapt::model {

struct BackboneConfig {
    std::size_t num_blocks = 6;
    std::size_t hidden_dim = 64;
    std::size_t ffn_dim = 256;
    std::size_t num_heads = 4;
    std::size_t input_dim = 20;

    void validate() const;
};

struct AdapterConfig {
    std::size_t bottleneck_dim = 16;
    // One flag per backbone block; empty means no adapters at all.
    std::vector<bool> insertion;

    static AdapterConfig none() { return AdapterConfig{16, {}}; }
    static AdapterConfig every_block(std::size_t num_blocks, std::size_t bottleneck);
    static AdapterConfig top_blocks(std::size_t num_blocks, std::size_t count, std::size_t bottleneck);

    bool any() const;
    void validate(const BackboneConfig& backbone) const;
};

struct DownstreamConfig {
    std::size_t num_blocks = 1;
    std::size_t hidden_dim = 32;
    std::size_t ffn_dim = 64;
    std::size_t num_heads = 2;
    std::size_t vocab_size = 10;  // excluding blank

    void validate() const;
};

struct ModelConfig {
    BackboneConfig backbone;
    AdapterConfig adapter = AdapterConfig::top_blocks(6, 2, 16);
    DownstreamConfig downstream;

    void validate() const;
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& doc);

class Model {
public:
    static Model build(const ModelConfig& cfg, std::uint64_t seed);

    const ModelConfig& config() const noexcept { return cfg_; }
    ParamStore& params() noexcept { return params_; }
    const ParamStore& params() const noexcept { return params_; }

    bool has_adapters() const noexcept { return cfg_.adapter.any(); }
    std::size_t vocab_size() const noexcept { return cfg_.downstream.vocab_size; }
    std::size_t output_dim() const noexcept { return cfg_.downstream.vocab_size + 1; }

    // (T, input_dim) features -> (T, vocab+1) log-probabilities.
    num::Var forward(num::Tape& tape, const Tensor& features) const;
    Tensor log_probs(const Tensor& features) const;

    // Number of leading backbone blocks that carry no adapter. When the
    // backbone is frozen their output depends on the features alone.
    std::size_t frozen_prefix_blocks() const;
    bool backbone_frozen() const;
    // Leading backbone blocks whose parameters (adapter included) are all
    // frozen; the whole backbone when nothing in it trains.
    std::size_t constant_prefix_blocks() const;

    // Hidden state after the input projection and the first `blocks` blocks.
    Tensor backbone_prefix(const Tensor& features, std::size_t blocks) const;
    // Continues the forward pass from a backbone_prefix() result.
    num::Var forward_from(num::Tape& tape, const Tensor& hidden, std::size_t start_block) const;

    // Fresh CTC head of shape (hidden, new_vocab+1) from its own seed stream.
    // Every other parameter is left untouched.
    void reinit_ctc_head(std::size_t new_vocab_size, std::uint64_t seed);

    // Copies all tensors of `group` from `other`, matched by name.
    void copy_group_from(const Model& other, ParamGroup group);

    std::uint64_t hash(ParamGroup group) const { return params_.hash(group); }

private:
    struct AttentionIds {
        ParamId wq, bq, wk, bk, wv, bv, wo, bo;
    };
    struct AdapterIds {
        ParamId down_w, down_b, up_w, up_b;
    };
    struct BlockIds {
        ParamId ln1_g, ln1_b;
        AttentionIds attn;
        ParamId ln2_g, ln2_b, ff1_w, ff1_b, ff2_w, ff2_b;
        std::optional<AdapterIds> adapter;
    };

    num::Var block(num::Tape& tape, num::Var x, const BlockIds& ids, std::size_t heads) const;
    num::Var attention(num::Tape& tape, num::Var h, const AttentionIds& ids, std::size_t heads) const;
    num::Var linear(num::Tape& tape, num::Var x, ParamId w, ParamId b) const;
    num::Var norm(num::Tape& tape, num::Var x, ParamId g, ParamId b) const;
    num::Var downstream(num::Tape& tape, num::Var hidden) const;

    ModelConfig cfg_;
    ParamStore params_;
    ParamId in_w_ = 0, in_b_ = 0;
    std::vector<BlockIds> backbone_blocks_;
    ParamId final_ln_g_ = 0, final_ln_b_ = 0;
    ParamId proj_w_ = 0, proj_b_ = 0;
    std::vector<BlockIds> downstream_blocks_;
    ParamId ds_ln_g_ = 0, ds_ln_b_ = 0;
    ParamId head_w_ = 0, head_b_ = 0;
};

// Free-function forms of the model operations.
inline Model build(const ModelConfig& cfg, std::uint64_t seed) { return Model::build(cfg, seed); }
Model reinit_ctc_head(const Model& model, std::size_t new_vocab_size, std::uint64_t seed);

struct ParamReportRow {
    std::string group;
    std::size_t count = 0;
    double percent = 0.0;
};

// One row per partition group; percents use the total over every group.
std::vector<ParamReportRow> param_report(const Model& model);
std::vector<ParamReportRow> param_report(const std::vector<std::pair<std::string, std::size_t>>& groups);

// Fraction of all parameters currently marked trainable.
double tunable_fraction(const Model& model);

// Checkpoint container: JSON with a mandatory version field.
struct Checkpoint {
    Model model;
    std::string phase;
    std::vector<int> vocabulary;  // global symbol id per head output (blank excluded)
    nlohmann::json metadata;
};

constexpr int kCheckpointVersion = 1;

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace iadapt::model
