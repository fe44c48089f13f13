// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/adaptation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>

#include "iadapt/ctc.hpp"
#include "iadapt/error.hpp"
#include "iadapt/seed.hpp"

namespace iadapt::adapt {

using model::Model;
using num::Tape;
using num::Var;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view to_string(Algorithm a) {
    return a == Algorithm::mtl ? "mtl" : "fomaml";
}

Algorithm parse_algorithm(std::string_view text) {
    if (text == "mtl") return Algorithm::mtl;
    if (text == "fomaml") return Algorithm::fomaml;
    fail(ErrorKind::invalid_config, "unknown algorithm '" + std::string(text) + "' (expected mtl or fomaml)");
}

std::string_view to_string(FinetuneMode m) {
    switch (m) {
        case FinetuneMode::peft: return "peft";
        case FinetuneMode::freeze_ft: return "freeze_ft";
        case FinetuneMode::full_ft: return "full_ft";
    }
    return "?";
}

FinetuneMode parse_finetune_mode(std::string_view text) {
    if (text == "peft") return FinetuneMode::peft;
    if (text == "freeze_ft") return FinetuneMode::freeze_ft;
    if (text == "full_ft") return FinetuneMode::full_ft;
    fail(ErrorKind::invalid_config, "unknown fine-tuning mode '" + std::string(text) + "'");
}

void AdaptationConfig::validate() const {
    require(alpha >= 0 && beta > 0 && mtl_lr > 0, ErrorKind::invalid_config,
            "need alpha >= 0 and beta, mtl_lr > 0");
    require(inner_steps >= 1, ErrorKind::invalid_config, "inner_steps must be >= 1");
    require(batch_size >= 1, ErrorKind::invalid_config, "batch_size must be >= 1");
    require(support_fraction > 0 && support_fraction < 1, ErrorKind::invalid_config,
            "support_fraction must be in (0, 1)");
}

void FinetuneConfig::validate() const {
    require(lr > 0, ErrorKind::invalid_config, "fine-tuning lr must be > 0");
    require(batch_size >= 1, ErrorKind::invalid_config, "batch_size must be >= 1");
}

nlohmann::json to_json(const AdaptationConfig& c) {
    return {{"algorithm", std::string(to_string(c.algorithm))},
            {"alpha", c.alpha},
            {"beta", c.beta},
            {"inner_steps", c.inner_steps},
            {"mtl_lr", c.mtl_lr},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"support_fraction", c.support_fraction},
            {"seed", c.seed},
            {"outer_optimizer", std::string(optim::to_string(c.outer_optimizer))},
            {"steps_per_epoch", c.steps_per_epoch}};
}

AdaptationConfig adaptation_config_from_json(const nlohmann::json& j, AdaptationConfig c) {
    try {
        if (j.contains("algorithm")) c.algorithm = parse_algorithm(j["algorithm"].get<std::string>());
        c.alpha = j.value("alpha", c.alpha);
        c.beta = j.value("beta", c.beta);
        c.inner_steps = j.value("inner_steps", c.inner_steps);
        c.mtl_lr = j.value("mtl_lr", c.mtl_lr);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.patience = j.value("patience", c.patience);
        c.support_fraction = j.value("support_fraction", c.support_fraction);
        c.seed = j.value("seed", c.seed);
        if (j.contains("outer_optimizer")) c.outer_optimizer = optim::parse_kind(j["outer_optimizer"].get<std::string>());
        c.steps_per_epoch = j.value("steps_per_epoch", c.steps_per_epoch);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("adaptation config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const FinetuneConfig& c) {
    return {{"lr", c.lr},
            {"batch_size", c.batch_size},
            {"max_epochs", c.max_epochs},
            {"patience", c.patience},
            {"seed", c.seed}};
}

FinetuneConfig finetune_config_from_json(const nlohmann::json& j, FinetuneConfig c) {
    try {
        c.lr = j.value("lr", c.lr);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.patience = j.value("patience", c.patience);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("fine-tuning config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json to_json(const PretrainConfig& c) {
    return {{"lr", c.lr}, {"batch_size", c.batch_size}, {"epochs", c.epochs}, {"seed", c.seed}};
}

PretrainConfig pretrain_config_from_json(const nlohmann::json& j, PretrainConfig c) {
    try {
        c.lr = j.value("lr", c.lr);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.epochs = j.value("epochs", c.epochs);
        c.seed = j.value("seed", c.seed);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("pretrain config: ") + e.what());
    }
    require(c.lr > 0 && c.batch_size >= 1, ErrorKind::invalid_config, "pretrain needs lr > 0 and batch_size >= 1");
    return c;
}

// --- logs -------------------------------------------------------------------

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

void TrainLog::write_csv(std::ostream& os, bool header) const {
    if (header) os << kCsvHeader << '\n';
    for (const LogRow& r : rows) {
        os << r.phase << ',' << r.epoch << ',' << r.step << ',' << r.language << ',' << fmt(r.loss) << ','
           << fmt(r.dev_loss) << ',' << fmt(r.wall_ms) << '\n';
    }
}

// --- quadratic surrogate ----------------------------------------------------

QuadraticObjective::QuadraticObjective(ParamStore& params, std::vector<std::vector<double>> centers)
    : params_(params), centers_(std::move(centers)) {
    require(!centers_.empty(), ErrorKind::invalid_argument, "quadratic objective needs at least one task");
    for (const auto& c : centers_) require(!c.empty(), ErrorKind::invalid_argument, "quadratic task with no items");
}

std::string QuadraticObjective::task_name(std::size_t task) const {
    return "q" + std::to_string(task);
}

double QuadraticObjective::item_loss(double center, GradientMap* grad, double weight) const {
    double loss = 0.0;
    for (ParamId id = 0; id < params_.size(); ++id) {
        const Parameter& p = params_[id];
        if (!p.trainable) continue;
        Tensor* g = nullptr;
        if (grad) {
            g = &grad->try_emplace(id, Tensor(p.value.shape(), 0.0)).first->second;
        }
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double d = p.value[i] - center;
            loss += 0.5 * d * d;
            if (g) (*g)[i] += weight * d;
        }
    }
    return loss;
}

LossGrad QuadraticObjective::loss_and_grad(std::size_t task, std::span<const std::size_t> items) {
    require(task < centers_.size(), ErrorKind::invalid_argument, "quadratic task out of range");
    require(!items.empty(), ErrorKind::invalid_argument, "empty batch");
    ++evaluations_;
    LossGrad out;
    const double w = 1.0 / static_cast<double>(items.size());
    for (std::size_t j : items) out.loss += w * item_loss(centers_[task].at(j), &out.grad, w);
    return out;
}

double QuadraticObjective::dev_loss() {
    double total = 0.0;
    for (const auto& task : centers_) {
        double t = 0.0;
        for (double c : task) t += item_loss(c, nullptr, 0.0);
        total += t / static_cast<double>(task.size());
    }
    return total / static_cast<double>(centers_.size());
}

// --- vocabulary ---------------------------------------------------------------

Vocabulary::Vocabulary(std::vector<int> symbols) : symbols_(std::move(symbols)) {
    require(!symbols_.empty(), ErrorKind::invalid_argument, "vocabulary is empty");
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
        require(symbols_[i] >= 0, ErrorKind::invalid_argument, "negative symbol id");
        if (!(index_.emplace(symbols_[i], static_cast<int>(i)).second)) {
            fail(ErrorKind::invalid_argument, "duplicate symbol " + std::to_string(symbols_[i]) + " in vocabulary");
        }
    }
}

Vocabulary Vocabulary::union_of(std::span<const synth::LanguageData* const> languages) {
    std::set<int> all;
    for (const synth::LanguageData* l : languages) all.insert(l->alphabet.begin(), l->alphabet.end());
    return Vocabulary(std::vector<int>(all.begin(), all.end()));
}

int Vocabulary::global(int local) const {
    if (!(local >= 0 && static_cast<std::size_t>(local) < symbols_.size())) {
        fail(ErrorKind::invalid_argument, "local label " + std::to_string(local) + " outside vocabulary");
    }
    return symbols_[static_cast<std::size_t>(local)];
}

int Vocabulary::local(int global) const {
    const auto it = index_.find(global);
    if (!(it != index_.end())) {
        fail(ErrorKind::invalid_argument, "symbol " + std::to_string(global) + " is not in the output vocabulary");
    }
    return it->second;
}

std::vector<int> Vocabulary::to_local(std::span<const int> globals) const {
    std::vector<int> out;
    out.reserve(globals.size());
    for (int g : globals) out.push_back(local(g));
    return out;
}

std::vector<int> Vocabulary::to_global(std::span<const int> locals) const {
    std::vector<int> out;
    out.reserve(locals.size());
    for (int l : locals) out.push_back(global(l));
    return out;
}

// --- CTC objective ----------------------------------------------------------

CtcObjective::CtcObjective(Model& model, std::vector<const synth::LanguageData*> languages, Vocabulary vocab)
    : model_(model), languages_(std::move(languages)), vocab_(std::move(vocab)) {
    require(!languages_.empty(), ErrorKind::invalid_argument, "CTC objective needs at least one language");
    if (!(model_.vocab_size() == vocab_.size())) {
        fail(ErrorKind::shape_mismatch, "model head has " + std::to_string(model_.vocab_size()) + " symbols, vocabulary has " + std::to_string(vocab_.size()));
    }
    use_cache_ = model_.backbone_frozen();
    start_block_ = use_cache_ ? model_.constant_prefix_blocks() : 0;
}

const Tensor& CtcObjective::hidden(std::size_t task, bool dev, std::size_t index) {
    const auto key = std::make_tuple(task, dev, index);
    auto it = cache_.find(key);
    if (it == cache_.end()) {
        const auto& split = dev ? languages_[task]->dev : languages_[task]->train;
        it = cache_.emplace(key, model_.backbone_prefix(split.at(index).features, start_block_)).first;
    }
    return it->second;
}

LossGrad CtcObjective::loss_and_grad(std::size_t task, std::span<const std::size_t> items) {
    require(task < languages_.size(), ErrorKind::invalid_argument, "task out of range");
    require(!items.empty(), ErrorKind::invalid_argument, "empty batch");
    ++evaluations_;
    const synth::LanguageData& lang = *languages_[task];
    Tape tape;
    Var total{};
    for (std::size_t k = 0; k < items.size(); ++k) {
        const synth::Utterance& u = lang.train.at(items[k]);
        const Var lp = use_cache_ ? model_.forward_from(tape, hidden(task, false, items[k]), start_block_)
                                  : model_.forward(tape, u.features);
        const std::vector<int> labels = vocab_.to_local(u.labels);
        const Var l = ctc::loss(tape, lp, labels);
        total = k == 0 ? l : tape.add(total, l);
    }
    const Var loss = tape.scale(total, 1.0 / static_cast<double>(items.size()));
    LossGrad out;
    out.loss = tape.value(loss)[0];
    out.grad = tape.backward(loss);
    return out;
}

double CtcObjective::dev_loss() {
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t task = 0; task < languages_.size(); ++task) {
        const auto& dev = languages_[task]->dev;
        if (dev.empty()) continue;
        double sum = 0.0;
        for (std::size_t i = 0; i < dev.size(); ++i) {
            Tape tape(false);
            const Var lp = use_cache_ ? model_.forward_from(tape, hidden(task, true, i), start_block_)
                                      : model_.forward(tape, dev[i].features);
            sum += ctc::loss(tape.value(lp), vocab_.to_local(dev[i].labels));
        }
        total += sum / static_cast<double>(dev.size());
        ++counted;
    }
    return counted == 0 ? kNaN : total / static_cast<double>(counted);
}

// --- training loops ---------------------------------------------------------

namespace {

class BatchSampler {
public:
    BatchSampler(const Objective& obj, std::uint64_t seed, std::string_view phase)
        : obj_(obj), rng_(make_rng(seed, "adapt.sampler." + std::string(phase))) {}

    std::size_t task() {
        std::uniform_int_distribution<std::size_t> d(0, obj_.num_tasks() - 1);
        return d(rng_);
    }

    // `count` distinct items in ascending order.
    std::vector<std::size_t> batch(std::size_t task, std::size_t count) {
        const std::size_t n = obj_.train_size(task);
        count = std::min(count, n);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < count; ++i) {
            std::uniform_int_distribution<std::size_t> d(i, n - 1);
            std::swap(idx[i], idx[d(rng_)]);
        }
        idx.resize(count);
        std::sort(idx.begin(), idx.end());
        return idx;
    }

private:
    const Objective& obj_;
    Rng rng_;
};

std::size_t steps_per_epoch(const Objective& obj, const AdaptationConfig& cfg) {
    if (cfg.steps_per_epoch > 0) return cfg.steps_per_epoch;
    std::size_t total = 0;
    for (std::size_t t = 0; t < obj.num_tasks(); ++t) total += obj.train_size(t);
    return std::max<std::size_t>(1, total / cfg.batch_size);
}

std::string log_language(const Objective& obj) {
    return obj.num_tasks() == 1 ? obj.task_name(0) : "all";
}

// Shared epoch / early-stopping driver. `step` performs one optimizer step
// and returns the loss it logs.
template <typename StepFn>
TrainResult run_epochs(Objective& obj, const AdaptationConfig& cfg, const std::string& phase, StepFn&& step) {
    require(obj.num_tasks() >= 1, ErrorKind::invalid_argument, "no training tasks");
    const auto start = std::chrono::steady_clock::now();
    const std::size_t per_epoch = steps_per_epoch(obj, cfg);
    const std::string language = log_language(obj);
    TrainResult r;
    r.best_dev_loss = kNaN;
    std::vector<Tensor> best;
    std::size_t stale = 0;
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        double loss_sum = 0.0;
        for (std::size_t s = 0; s < per_epoch; ++s) {
            ++r.steps;
            loss_sum += step(r.steps);
        }
        const double train_loss = loss_sum / static_cast<double>(per_epoch);
        const double dev = obj.dev_loss();
        r.epochs_run = epoch;
        r.epoch_train_loss.push_back(train_loss);
        r.epoch_dev_loss.push_back(dev);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        r.log.rows.push_back(LogRow{phase, epoch, r.steps, language, train_loss, dev, ms});
        if (std::isnan(dev)) continue;
        if (std::isnan(r.best_dev_loss) || dev < r.best_dev_loss) {
            r.best_dev_loss = dev;
            r.best_epoch = epoch;
            best = obj.params().snapshot_trainable();
            stale = 0;
        } else if (++stale >= cfg.patience) {
            break;
        }
    }
    if (r.best_epoch > 0) obj.params().restore_trainable(best);
    return r;
}

}  // namespace

TrainResult train_mtl(Objective& obj, const AdaptationConfig& cfg, const std::string& phase,
                      const StepObserver& observer) {
    cfg.validate();
    BatchSampler sampler(obj, cfg.seed, phase);
    optim::Adam adam(cfg.mtl_lr);
    return run_epochs(obj, cfg, phase, [&](std::size_t step) {
        const std::size_t task = sampler.task();
        const std::vector<std::size_t> batch = sampler.batch(task, cfg.batch_size);
        const LossGrad lg = obj.loss_and_grad(task, batch);
        adam.step(obj.params(), lg.grad);
        if (observer) observer(StepInfo{step, task, {}, batch, lg.loss, &obj.params()});
        return lg.loss;
    });
}

TrainResult train_fomaml(Objective& obj, const AdaptationConfig& cfg, const std::string& phase,
                         const StepObserver& observer) {
    cfg.validate();
    BatchSampler sampler(obj, cfg.seed, phase);
    std::unique_ptr<optim::Optimizer> outer = optim::make(cfg.outer_optimizer, cfg.beta);
    return run_epochs(obj, cfg, phase, [&](std::size_t step) {
        const std::size_t task = sampler.task();
        const std::vector<std::size_t> batch = sampler.batch(task, cfg.batch_size);
        const auto n_support = static_cast<std::size_t>(std::floor(cfg.support_fraction * static_cast<double>(batch.size())));
        if (!(n_support >= 1 && n_support < batch.size())) {
            fail(ErrorKind::invalid_config, "batch of " + std::to_string(batch.size()) + " from " + obj.task_name(task) + " is too small to split into support and query");
        }
        const std::span<const std::size_t> support(batch.data(), n_support);
        const std::span<const std::size_t> query(batch.data() + n_support, batch.size() - n_support);

        const std::vector<Tensor> theta = obj.params().snapshot_trainable();
        optim::Sgd inner(cfg.alpha);
        for (std::size_t k = 0; k < cfg.inner_steps; ++k) inner.step(obj.params(), obj.loss_and_grad(task, support).grad);
        // First-order: the query gradient at θ' is applied at θ as is.
        const LossGrad q = obj.loss_and_grad(task, query);
        obj.params().restore_trainable(theta);
        outer->step(obj.params(), q.grad);
        if (observer) observer(StepInfo{step, task, support, query, q.loss, &obj.params()});
        return q.loss;
    });
}

TrainResult train(Objective& obj, const AdaptationConfig& cfg, const std::string& phase,
                  const StepObserver& observer) {
    return cfg.algorithm == Algorithm::mtl ? train_mtl(obj, cfg, phase, observer)
                                           : train_fomaml(obj, cfg, phase, observer);
}

// --- model-level operations -------------------------------------------------

void apply_mode(Model& model, FinetuneMode mode) {
    ParamStore& p = model.params();
    p.set_trainable(ParamGroup::backbone, mode == FinetuneMode::full_ft);
    p.set_trainable(ParamGroup::adapter, mode != FinetuneMode::freeze_ft);
    p.set_trainable(ParamGroup::downstream_body, true);
    p.set_trainable(ParamGroup::ctc_head, true);
}

WarmResult intermediate_adaptation(const Model& model, std::span<const synth::LanguageData* const> sources,
                                   const AdaptationConfig& cfg) {
    cfg.validate();
    require(!sources.empty(), ErrorKind::invalid_argument, "intermediate adaptation needs at least one source");
    require(model.has_adapters(), ErrorKind::invalid_config, "intermediate adaptation needs a model with adapters");
    WarmResult out{model, Vocabulary::union_of(sources), {}};
    out.model.reinit_ctc_head(out.vocabulary.size(), derive_seed(cfg.seed, "ia.head"));
    apply_mode(out.model, FinetuneMode::peft);
    const std::string phase = cfg.algorithm == Algorithm::mtl ? "ia_mtl" : "ia_fomaml";
    CtcObjective obj(out.model, {sources.begin(), sources.end()}, out.vocabulary);
    out.training = train(obj, cfg, phase);
    return out;
}

WarmResult ia_mtl(const Model& model, std::span<const synth::LanguageData* const> sources, AdaptationConfig cfg) {
    cfg.algorithm = Algorithm::mtl;
    return intermediate_adaptation(model, sources, cfg);
}

WarmResult ia_fomaml(const Model& model, std::span<const synth::LanguageData* const> sources, AdaptationConfig cfg) {
    cfg.algorithm = Algorithm::fomaml;
    return intermediate_adaptation(model, sources, cfg);
}

metrics::ErrorCounts evaluate(const Model& model, const Vocabulary& vocab, const synth::LanguageData& lang,
                              std::string_view split) {
    require(model.vocab_size() == vocab.size(), ErrorKind::shape_mismatch, "model head does not match vocabulary");
    const auto& utts = lang.split(split);
    std::vector<metrics::LabelSequence> refs, hyps;
    refs.reserve(utts.size());
    hyps.reserve(utts.size());
    for (const synth::Utterance& u : utts) {
        refs.push_back(u.labels);
        hyps.push_back(vocab.to_global(ctc::greedy_decode(model.log_probs(u.features))));
    }
    return metrics::count_errors(refs, hyps);
}

Model prepare_finetune(const Model& warm, const synth::LanguageData& target, FinetuneMode mode,
                       const FinetuneConfig& cfg) {
    Model m = warm;
    m.reinit_ctc_head(target.alphabet.size(), derive_seed(cfg.seed, "finetune.head." + target.code));
    apply_mode(m, mode);
    return m;
}

FinetuneResult finetune_target(const Model& warm, const synth::LanguageData& target, FinetuneMode mode,
                               const FinetuneConfig& cfg) {
    cfg.validate();
    if (!(!target.train.empty() && !target.test.empty())) {
        fail(ErrorKind::invalid_argument, "target " + target.code + " is missing its train or test split");
    }
    FinetuneResult out{prepare_finetune(warm, target, mode, cfg), Vocabulary(target.alphabet), {}, {}};
    if (cfg.max_epochs > 0) {
        AdaptationConfig tc;
        tc.mtl_lr = cfg.lr;
        tc.batch_size = cfg.batch_size;
        tc.max_epochs = cfg.max_epochs;
        tc.patience = cfg.patience;
        tc.seed = derive_seed(cfg.seed, "finetune." + target.code);
        CtcObjective obj(out.model, {&target}, out.vocabulary);
        out.training = train_mtl(obj, tc, "finetune_" + std::string(to_string(mode)));
    }
    out.report.add(target.code, "test", evaluate(out.model, out.vocabulary, target, "test"));
    return out;
}

JointResult run_baseline_st_mtl(const Model& model, std::span<const synth::LanguageData* const> sources,
                                std::span<const synth::LanguageData* const> targets, AdaptationConfig cfg) {
    require(!targets.empty(), ErrorKind::invalid_argument, "S&T-MTL needs at least one target");
    std::vector<const synth::LanguageData*> all(sources.begin(), sources.end());
    for (const synth::LanguageData* t : targets) {
        if (std::find(all.begin(), all.end(), t) == all.end()) all.push_back(t);
    }
    cfg.algorithm = Algorithm::mtl;
    cfg.validate();
    JointResult out{model, Vocabulary::union_of(all), {}, {}};
    out.model.reinit_ctc_head(out.vocabulary.size(), derive_seed(cfg.seed, "st_mtl.head"));
    apply_mode(out.model, FinetuneMode::peft);
    {
        CtcObjective obj(out.model, all, out.vocabulary);
        out.training = train_mtl(obj, cfg, "st_mtl");
    }
    for (const synth::LanguageData* t : targets) {
        out.report.add(t->code, "test", evaluate(out.model, out.vocabulary, *t, "test"));
    }
    return out;
}

PretrainResult pretrain_backbone(const model::ModelConfig& cfg, std::span<const synth::LanguageData* const> pool,
                                 const PretrainConfig& pcfg, std::uint64_t model_seed) {
    require(!pool.empty(), ErrorKind::invalid_argument, "pre-training pool is empty");
    model::ModelConfig bare = cfg;
    bare.adapter = model::AdapterConfig::none();
    const Vocabulary vocab = Vocabulary::union_of(pool);
    bare.downstream.vocab_size = vocab.size();
    PretrainResult out{Model::build(bare, derive_seed(model_seed, "pretrain.model")), {}};
    apply_mode(out.model, FinetuneMode::full_ft);
    AdaptationConfig tc;
    tc.mtl_lr = pcfg.lr;
    tc.batch_size = pcfg.batch_size;
    tc.max_epochs = pcfg.epochs;
    tc.patience = pcfg.epochs + 1;
    tc.seed = derive_seed(pcfg.seed, "pretrain");
    CtcObjective obj(out.model, {pool.begin(), pool.end()}, vocab);
    out.training = train_mtl(obj, tc, "pretrain");
    out.model.params().set_trainable(ParamGroup::backbone, false);
    return out;
}

}  // namespace iadapt::adapt
