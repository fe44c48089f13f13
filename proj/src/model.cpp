// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "iadapt/error.hpp"
#include "iadapt/seed.hpp"

namespace iadapt::model {

using num::Tape;
using num::Var;

void BackboneConfig::validate() const {
    require(num_blocks >= 1 && hidden_dim >= 1 && ffn_dim >= 1 && num_heads >= 1 && input_dim >= 1,
            ErrorKind::invalid_config, "backbone dimensions must be positive");
    if (!(hidden_dim % num_heads == 0)) {
        fail(ErrorKind::invalid_config, "backbone hidden_dim " + std::to_string(hidden_dim) + " not divisible by num_heads " + std::to_string(num_heads));
    }
}

AdapterConfig AdapterConfig::every_block(std::size_t num_blocks, std::size_t bottleneck) {
    return AdapterConfig{bottleneck, std::vector<bool>(num_blocks, true)};
}

AdapterConfig AdapterConfig::top_blocks(std::size_t num_blocks, std::size_t count, std::size_t bottleneck) {
    AdapterConfig cfg{bottleneck, std::vector<bool>(num_blocks, false)};
    for (std::size_t i = num_blocks - std::min(count, num_blocks); i < num_blocks; ++i) cfg.insertion[i] = true;
    return cfg;
}

bool AdapterConfig::any() const {
    for (bool b : insertion) {
        if (b) return true;
    }
    return false;
}

void AdapterConfig::validate(const BackboneConfig& backbone) const {
    if (insertion.empty()) return;
    if (!(insertion.size() == backbone.num_blocks)) {
        fail(ErrorKind::invalid_config, "adapter insertion has " + std::to_string(insertion.size()) + " flags for " + std::to_string(backbone.num_blocks) + " blocks");
    }
    if (!(bottleneck_dim >= 1 && bottleneck_dim < backbone.hidden_dim)) {
        fail(ErrorKind::invalid_config, "adapter bottleneck " + std::to_string(bottleneck_dim) + " must be in [1, hidden_dim)");
    }
}

void DownstreamConfig::validate() const {
    require(num_blocks >= 1 && hidden_dim >= 1 && ffn_dim >= 1 && num_heads >= 1, ErrorKind::invalid_config,
            "downstream dimensions must be positive");
    require(hidden_dim % num_heads == 0, ErrorKind::invalid_config, "downstream hidden_dim not divisible by num_heads");
    require(vocab_size >= 1, ErrorKind::invalid_config, "downstream vocab_size must be >= 1");
}

void ModelConfig::validate() const {
    backbone.validate();
    adapter.validate(backbone);
    downstream.validate();
}

nlohmann::json to_json(const ModelConfig& cfg) {
    nlohmann::json j;
    j["backbone"] = {{"num_blocks", cfg.backbone.num_blocks},
                     {"hidden_dim", cfg.backbone.hidden_dim},
                     {"ffn_dim", cfg.backbone.ffn_dim},
                     {"num_heads", cfg.backbone.num_heads},
                     {"input_dim", cfg.backbone.input_dim}};
    j["adapter"] = {{"bottleneck_dim", cfg.adapter.bottleneck_dim}, {"insertion", cfg.adapter.insertion}};
    j["downstream"] = {{"num_blocks", cfg.downstream.num_blocks},
                       {"hidden_dim", cfg.downstream.hidden_dim},
                       {"ffn_dim", cfg.downstream.ffn_dim},
                       {"num_heads", cfg.downstream.num_heads},
                       {"vocab_size", cfg.downstream.vocab_size}};
    return j;
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig cfg;
    try {
        if (j.contains("backbone")) {
            const auto& b = j["backbone"];
            cfg.backbone.num_blocks = b.value("num_blocks", cfg.backbone.num_blocks);
            cfg.backbone.hidden_dim = b.value("hidden_dim", cfg.backbone.hidden_dim);
            cfg.backbone.ffn_dim = b.value("ffn_dim", cfg.backbone.ffn_dim);
            cfg.backbone.num_heads = b.value("num_heads", cfg.backbone.num_heads);
            cfg.backbone.input_dim = b.value("input_dim", cfg.backbone.input_dim);
        }
        cfg.adapter = AdapterConfig::top_blocks(cfg.backbone.num_blocks, 2, cfg.adapter.bottleneck_dim);
        if (j.contains("adapter")) {
            const auto& a = j["adapter"];
            cfg.adapter.bottleneck_dim = a.value("bottleneck_dim", cfg.adapter.bottleneck_dim);
            if (a.contains("insertion")) {
                cfg.adapter.insertion = a["insertion"].get<std::vector<bool>>();
            } else if (a.contains("top_blocks")) {
                cfg.adapter = AdapterConfig::top_blocks(cfg.backbone.num_blocks, a["top_blocks"].get<std::size_t>(),
                                                        cfg.adapter.bottleneck_dim);
            }
        }
        if (j.contains("downstream")) {
            const auto& d = j["downstream"];
            cfg.downstream.num_blocks = d.value("num_blocks", cfg.downstream.num_blocks);
            cfg.downstream.hidden_dim = d.value("hidden_dim", cfg.downstream.hidden_dim);
            cfg.downstream.ffn_dim = d.value("ffn_dim", cfg.downstream.ffn_dim);
            cfg.downstream.num_heads = d.value("num_heads", cfg.downstream.num_heads);
            cfg.downstream.vocab_size = d.value("vocab_size", cfg.downstream.vocab_size);
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("model config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

namespace {

enum class Init { normal_fan_in, zeros, ones, small_normal };

Tensor init_tensor(num::Shape shape, Init init, std::uint64_t seed, const std::string& name) {
    Tensor t(std::move(shape), 0.0);
    switch (init) {
        case Init::zeros:
            break;
        case Init::ones:
            t.fill(1.0);
            break;
        case Init::normal_fan_in: {
            Rng rng = make_rng(seed, name);
            std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(t.shape()[0])));
            for (double& v : t.data()) v = dist(rng);
            break;
        }
        case Init::small_normal: {
            Rng rng = make_rng(seed, name);
            std::normal_distribution<double> dist(0.0, 0.02);
            for (double& v : t.data()) v = dist(rng);
            break;
        }
    }
    return t;
}

class Builder {
public:
    Builder(ParamStore& store, std::uint64_t seed) : store_(store), seed_(seed) {}

    ParamId add(const std::string& name, ParamGroup group, num::Shape shape, Init init, bool trainable) {
        return store_.add(name, group, init_tensor(std::move(shape), init, seed_, name), trainable);
    }

private:
    ParamStore& store_;
    std::uint64_t seed_;
};

}  // namespace

Model Model::build(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Model m;
    m.cfg_ = cfg;
    Builder b(m.params_, seed);
    const auto& bb = cfg.backbone;
    const std::size_t H = bb.hidden_dim;

    auto make_block = [&](const std::string& prefix, ParamGroup group, std::size_t dim, std::size_t ffn,
                          bool trainable) {
        BlockIds ids{};
        ids.ln1_g = b.add(prefix + ".ln1.g", group, {dim}, Init::ones, trainable);
        ids.ln1_b = b.add(prefix + ".ln1.b", group, {dim}, Init::zeros, trainable);
        ids.attn.wq = b.add(prefix + ".attn.q.w", group, {dim, dim}, Init::normal_fan_in, trainable);
        ids.attn.bq = b.add(prefix + ".attn.q.b", group, {dim}, Init::zeros, trainable);
        ids.attn.wk = b.add(prefix + ".attn.k.w", group, {dim, dim}, Init::normal_fan_in, trainable);
        ids.attn.bk = b.add(prefix + ".attn.k.b", group, {dim}, Init::zeros, trainable);
        ids.attn.wv = b.add(prefix + ".attn.v.w", group, {dim, dim}, Init::normal_fan_in, trainable);
        ids.attn.bv = b.add(prefix + ".attn.v.b", group, {dim}, Init::zeros, trainable);
        ids.attn.wo = b.add(prefix + ".attn.o.w", group, {dim, dim}, Init::normal_fan_in, trainable);
        ids.attn.bo = b.add(prefix + ".attn.o.b", group, {dim}, Init::zeros, trainable);
        ids.ln2_g = b.add(prefix + ".ln2.g", group, {dim}, Init::ones, trainable);
        ids.ln2_b = b.add(prefix + ".ln2.b", group, {dim}, Init::zeros, trainable);
        ids.ff1_w = b.add(prefix + ".ff1.w", group, {dim, ffn}, Init::normal_fan_in, trainable);
        ids.ff1_b = b.add(prefix + ".ff1.b", group, {ffn}, Init::zeros, trainable);
        ids.ff2_w = b.add(prefix + ".ff2.w", group, {ffn, dim}, Init::normal_fan_in, trainable);
        ids.ff2_b = b.add(prefix + ".ff2.b", group, {dim}, Init::zeros, trainable);
        return ids;
    };

    m.in_w_ = b.add("backbone.in.w", ParamGroup::backbone, {bb.input_dim, H}, Init::normal_fan_in, false);
    m.in_b_ = b.add("backbone.in.b", ParamGroup::backbone, {H}, Init::zeros, false);
    for (std::size_t i = 0; i < bb.num_blocks; ++i) {
        const std::string prefix = "backbone.block" + std::to_string(i);
        BlockIds ids = make_block(prefix, ParamGroup::backbone, H, bb.ffn_dim, false);
        if (!cfg.adapter.insertion.empty() && cfg.adapter.insertion[i]) {
            const std::size_t B = cfg.adapter.bottleneck_dim;
            AdapterIds a{};
            a.down_w = b.add(prefix + ".adapter.down.w", ParamGroup::adapter, {H, B}, Init::normal_fan_in, true);
            a.down_b = b.add(prefix + ".adapter.down.b", ParamGroup::adapter, {B}, Init::zeros, true);
            // Zero up-projection: the adapter starts as the identity map.
            a.up_w = b.add(prefix + ".adapter.up.w", ParamGroup::adapter, {B, H}, Init::zeros, true);
            a.up_b = b.add(prefix + ".adapter.up.b", ParamGroup::adapter, {H}, Init::zeros, true);
            ids.adapter = a;
        }
        m.backbone_blocks_.push_back(ids);
    }
    m.final_ln_g_ = b.add("backbone.final_ln.g", ParamGroup::backbone, {H}, Init::ones, false);
    m.final_ln_b_ = b.add("backbone.final_ln.b", ParamGroup::backbone, {H}, Init::zeros, false);

    const auto& ds = cfg.downstream;
    const std::size_t D = ds.hidden_dim;
    m.proj_w_ = b.add("downstream.proj.w", ParamGroup::downstream_body, {H, D}, Init::normal_fan_in, true);
    m.proj_b_ = b.add("downstream.proj.b", ParamGroup::downstream_body, {D}, Init::zeros, true);
    for (std::size_t i = 0; i < ds.num_blocks; ++i) {
        m.downstream_blocks_.push_back(
            make_block("downstream.block" + std::to_string(i), ParamGroup::downstream_body, D, ds.ffn_dim, true));
    }
    m.ds_ln_g_ = b.add("downstream.final_ln.g", ParamGroup::downstream_body, {D}, Init::ones, true);
    m.ds_ln_b_ = b.add("downstream.final_ln.b", ParamGroup::downstream_body, {D}, Init::zeros, true);
    m.head_w_ = b.add("downstream.head.w", ParamGroup::ctc_head, {D, ds.vocab_size + 1}, Init::normal_fan_in, true);
    m.head_b_ = b.add("downstream.head.b", ParamGroup::ctc_head, {ds.vocab_size + 1}, Init::small_normal, true);
    return m;
}

Var Model::linear(Tape& tape, Var x, ParamId w, ParamId b) const {
    return tape.linear(x, params_.bind(tape, w), params_.bind(tape, b));
}

Var Model::norm(Tape& tape, Var x, ParamId g, ParamId b) const {
    return tape.layer_norm(x, params_.bind(tape, g), params_.bind(tape, b));
}

Var Model::attention(Tape& tape, Var h, const AttentionIds& ids, std::size_t heads) const {
    const Var q = linear(tape, h, ids.wq, ids.bq);
    const Var k = linear(tape, h, ids.wk, ids.bk);
    const Var v = linear(tape, h, ids.wv, ids.bv);
    const std::size_t dim = tape.value(q).cols();
    const std::size_t dh = dim / heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
    std::vector<Var> outs;
    outs.reserve(heads);
    for (std::size_t hd = 0; hd < heads; ++hd) {
        const std::size_t lo = hd * dh, hi = lo + dh;
        const Var qh = tape.slice_cols(q, lo, hi);
        const Var kh = tape.slice_cols(k, lo, hi);
        const Var vh = tape.slice_cols(v, lo, hi);
        const Var weights = tape.softmax(tape.scale(tape.matmul_nt(qh, kh), inv_sqrt));
        outs.push_back(tape.matmul(weights, vh));
    }
    const Var merged = heads == 1 ? outs.front() : tape.concat_cols(outs);
    return linear(tape, merged, ids.wo, ids.bo);
}

Var Model::block(Tape& tape, Var x, const BlockIds& ids, std::size_t heads) const {
    const Var attn = attention(tape, norm(tape, x, ids.ln1_g, ids.ln1_b), ids.attn, heads);
    x = tape.add(x, attn);
    const Var h = norm(tape, x, ids.ln2_g, ids.ln2_b);
    Var f = linear(tape, tape.gelu(linear(tape, h, ids.ff1_w, ids.ff1_b)), ids.ff2_w, ids.ff2_b);
    if (ids.adapter) {
        const AdapterIds& a = *ids.adapter;
        const Var bottleneck = tape.gelu(linear(tape, f, a.down_w, a.down_b));
        f = tape.add(f, linear(tape, bottleneck, a.up_w, a.up_b));
    }
    return tape.add(x, f);
}

Var Model::downstream(Tape& tape, Var hidden) const {
    Var d = linear(tape, hidden, proj_w_, proj_b_);
    for (const BlockIds& ids : downstream_blocks_) d = block(tape, d, ids, cfg_.downstream.num_heads);
    d = norm(tape, d, ds_ln_g_, ds_ln_b_);
    return tape.log_softmax(linear(tape, d, head_w_, head_b_));
}

Var Model::forward(Tape& tape, const Tensor& features) const {
    if (!(features.rank() == 2)) {
        fail(ErrorKind::shape_mismatch, "features must be (T, input_dim), got " + num::shape_string(features.shape()));
    }
    if (!(features.cols() == cfg_.backbone.input_dim)) {
        fail(ErrorKind::shape_mismatch, "feature dim " + std::to_string(features.cols()) + " != input_dim " + std::to_string(cfg_.backbone.input_dim));
    }
    Var x = linear(tape, tape.constant(features), in_w_, in_b_);
    for (const BlockIds& ids : backbone_blocks_) x = block(tape, x, ids, cfg_.backbone.num_heads);
    x = norm(tape, x, final_ln_g_, final_ln_b_);
    return downstream(tape, x);
}

Tensor Model::log_probs(const Tensor& features) const {
    Tape tape(false);
    return tape.value(forward(tape, features));
}

std::size_t Model::frozen_prefix_blocks() const {
    std::size_t n = 0;
    while (n < backbone_blocks_.size() && !backbone_blocks_[n].adapter) ++n;
    return n;
}

bool Model::backbone_frozen() const {
    for (const Parameter& p : params_) {
        if (p.group == ParamGroup::backbone && p.trainable) return false;
    }
    return true;
}

std::size_t Model::constant_prefix_blocks() const {
    if (!backbone_frozen()) return 0;
    std::size_t n = 0;
    for (; n < backbone_blocks_.size(); ++n) {
        const auto& a = backbone_blocks_[n].adapter;
        if (a && (params_[a->down_w].trainable || params_[a->down_b].trainable || params_[a->up_w].trainable ||
                  params_[a->up_b].trainable)) {
            break;
        }
    }
    return n;
}

Tensor Model::backbone_prefix(const Tensor& features, std::size_t blocks) const {
    require(blocks <= backbone_blocks_.size(), ErrorKind::invalid_argument, "prefix longer than the backbone");
    if (!(features.rank() == 2 && features.cols() == cfg_.backbone.input_dim)) {
        fail(ErrorKind::shape_mismatch, "features must be (T, " + std::to_string(cfg_.backbone.input_dim) + "), got " + num::shape_string(features.shape()));
    }
    Tape tape(false);
    Var x = linear(tape, tape.constant(features), in_w_, in_b_);
    for (std::size_t i = 0; i < blocks; ++i) x = block(tape, x, backbone_blocks_[i], cfg_.backbone.num_heads);
    return tape.value(x);
}

Var Model::forward_from(Tape& tape, const Tensor& hidden, std::size_t start_block) const {
    require(start_block <= backbone_blocks_.size(), ErrorKind::invalid_argument, "start block beyond the backbone");
    require(hidden.rank() == 2 && hidden.cols() == cfg_.backbone.hidden_dim, ErrorKind::shape_mismatch,
            "hidden state must be (T, hidden_dim)");
    Var x = tape.constant(hidden);
    for (std::size_t i = start_block; i < backbone_blocks_.size(); ++i) {
        x = block(tape, x, backbone_blocks_[i], cfg_.backbone.num_heads);
    }
    x = norm(tape, x, final_ln_g_, final_ln_b_);
    return downstream(tape, x);
}

void Model::reinit_ctc_head(std::size_t new_vocab_size, std::uint64_t seed) {
    require(new_vocab_size >= 1, ErrorKind::invalid_config, "CTC head needs vocab_size >= 1");
    const std::size_t D = cfg_.downstream.hidden_dim;
    const std::uint64_t head_seed = derive_seed(seed, "ctc_head.reinit", new_vocab_size);
    Parameter& w = params_[head_w_];
    Parameter& b = params_[head_b_];
    w.value = init_tensor({D, new_vocab_size + 1}, Init::normal_fan_in, head_seed, w.name);
    b.value = init_tensor({new_vocab_size + 1}, Init::small_normal, head_seed, b.name);
    cfg_.downstream.vocab_size = new_vocab_size;
}

void Model::copy_group_from(const Model& other, ParamGroup group) {
    for (Parameter& p : params_) {
        if (p.group != group) continue;
        const auto id = other.params_.find(p.name);
        if (!(id.has_value())) {
            fail(ErrorKind::invalid_argument, "source model lacks parameter " + p.name);
        }
        const Parameter& src = other.params_[*id];
        if (!(src.value.shape() == p.value.shape())) {
            fail(ErrorKind::shape_mismatch, "parameter " + p.name + " shape " + num::shape_string(src.value.shape()) + " vs " + num::shape_string(p.value.shape()));
        }
        p.value = src.value;
    }
}

Model reinit_ctc_head(const Model& model, std::size_t new_vocab_size, std::uint64_t seed) {
    Model out = model;
    out.reinit_ctc_head(new_vocab_size, seed);
    return out;
}

std::vector<ParamReportRow> param_report(const std::vector<std::pair<std::string, std::size_t>>& groups) {
    std::size_t total = 0;
    for (const auto& [name, count] : groups) total += count;
    std::vector<ParamReportRow> rows;
    for (const auto& [name, count] : groups) {
        rows.push_back(ParamReportRow{name, count,
                                      total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total)});
    }
    return rows;
}

std::vector<ParamReportRow> param_report(const Model& model) {
    const ParamStore& p = model.params();
    return param_report({{"backbone", p.count(ParamGroup::backbone)},
                         {"adapter", p.count(ParamGroup::adapter)},
                         {"downstream_body", p.count(ParamGroup::downstream_body)},
                         {"ctc_head", p.count(ParamGroup::ctc_head)}});
}

double tunable_fraction(const Model& model) {
    const ParamStore& p = model.params();
    return static_cast<double>(p.count_trainable()) / static_cast<double>(p.count_total());
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    nlohmann::json doc;
    doc["format"] = "iadapt-checkpoint";
    doc["version"] = kCheckpointVersion;
    doc["phase"] = ck.phase;
    doc["config"] = to_json(ck.model.config());
    doc["vocabulary"] = ck.vocabulary;
    doc["metadata"] = ck.metadata.is_null() ? nlohmann::json::object() : ck.metadata;
    nlohmann::json params = nlohmann::json::array();
    for (const Parameter& p : ck.model.params()) {
        params.push_back({{"name", p.name},
                          {"group", std::string(to_string(p.group))},
                          {"trainable", p.trainable},
                          {"shape", p.value.shape()},
                          {"data", p.value.values()}});
    }
    doc["params"] = std::move(params);
    std::ofstream out(path);
    if (!(out.good())) {
        fail(ErrorKind::io, "cannot write checkpoint " + path.string());
    }
    out << doc.dump() << '\n';
    if (!(out.good())) {
        fail(ErrorKind::io, "failed writing checkpoint " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!(in.good())) {
        fail(ErrorKind::io, "cannot open checkpoint " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, "checkpoint " + path.string() + ": " + e.what());
    }
    require(doc.contains("version"), ErrorKind::format, "checkpoint lacks a version field");
    if (!(doc["version"].get<int>() == kCheckpointVersion)) {
        fail(ErrorKind::format, "unsupported checkpoint version " + doc["version"].dump());
    }
    const ModelConfig cfg = model_config_from_json(doc.at("config"));
    Checkpoint ck{Model::build(cfg, 0), doc.value("phase", std::string()), {}, doc.value("metadata", nlohmann::json::object())};
    if (doc.contains("vocabulary")) ck.vocabulary = doc["vocabulary"].get<std::vector<int>>();
    ParamStore& store = ck.model.params();
    std::size_t loaded = 0;
    for (const auto& jp : doc.at("params")) {
        const std::string name = jp.at("name").get<std::string>();
        const auto id = store.find(name);
        if (!(id.has_value())) {
            fail(ErrorKind::format, "checkpoint parameter " + name + " not in model layout");
        }
        Parameter& p = store[*id];
        Tensor value(jp.at("shape").get<num::Shape>(), jp.at("data").get<std::vector<double>>());
        if (!(value.shape() == p.value.shape())) {
            fail(ErrorKind::format, "checkpoint parameter " + name + " has wrong shape");
        }
        if (!(parse_param_group(jp.at("group").get<std::string>()) == p.group)) {
            fail(ErrorKind::format, "checkpoint parameter " + name + " has wrong group");
        }
        p.value = std::move(value);
        p.trainable = jp.value("trainable", p.trainable);
        ++loaded;
    }
    if (!(loaded == store.size())) {
        fail(ErrorKind::format, "checkpoint has " + std::to_string(loaded) + " of " + std::to_string(store.size()) + " parameters");
    }
    return ck;
}

}  // namespace iadapt::model
