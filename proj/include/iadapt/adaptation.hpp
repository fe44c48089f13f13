// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Intermediate adaptation (multitask and first-order MAML warm-up of the
// adapter + downstream parameters), per-target fine-tuning, and baselines.
//
// The training loops are written against Objective, which hides where the
// loss comes from. CtcObjective trains a Model on synthetic languages;
// QuadraticObjective is a closed-form stand-in used to check optimizer math.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "iadapt/metrics.hpp"
#include "iadapt/model.hpp"
#include "iadapt/optim.hpp"
#include "iadapt/params.hpp"
#include "iadapt/synthdata.hpp"

namespace iadapt::adapt {

enum class Algorithm { mtl, fomaml };
enum class FinetuneMode { peft, freeze_ft, full_ft };

std::string_view to_string(Algorithm a);
Algorithm parse_algorithm(std::string_view text);
std::string_view to_string(FinetuneMode m);
FinetuneMode parse_finetune_mode(std::string_view text);

struct AdaptationConfig {
    Algorithm algorithm = Algorithm::mtl;
    double alpha = 1e-3;   // FOMAML inner SGD rate
    double beta = 1e-4;    // FOMAML outer rate
    std::size_t inner_steps = 1;
    double mtl_lr = 1e-4;  // Adam rate for MTL
    std::size_t batch_size = 8;
    std::size_t max_epochs = 40;
    std::size_t patience = 5;
    double support_fraction = 0.5;
    std::uint64_t seed = 0;
    // Outer optimizer; sgd exists for closed-form tests.
    optim::Kind outer_optimizer = optim::Kind::adam;
    // 0: Σ train sizes / batch_size (at least 1).
    std::size_t steps_per_epoch = 0;

    void validate() const;
};

struct FinetuneConfig {
    double lr = 1e-4;
    std::size_t batch_size = 8;
    std::size_t max_epochs = 40;
    std::size_t patience = 5;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const AdaptationConfig& cfg);
AdaptationConfig adaptation_config_from_json(const nlohmann::json& doc, AdaptationConfig base = {});
nlohmann::json to_json(const FinetuneConfig& cfg);
FinetuneConfig finetune_config_from_json(const nlohmann::json& doc, FinetuneConfig base = {});

// --- logs -------------------------------------------------------------------

struct LogRow {
    std::string phase;
    std::size_t epoch = 0;
    std::size_t step = 0;  // optimizer steps completed
    std::string language;
    double loss = 0.0;      // mean training loss over the epoch
    double dev_loss = 0.0;  // NaN when there is no dev data
    double wall_ms = 0.0;
};

struct TrainLog {
    std::vector<LogRow> rows;

    static constexpr const char* kCsvHeader = "phase,epoch,step,language,loss,dev_loss,wall_ms";
    void write_csv(std::ostream& os, bool header = true) const;
};

// --- objectives -------------------------------------------------------------

struct LossGrad {
    double loss = 0.0;
    GradientMap grad;
};

class Objective {
public:
    virtual ~Objective() = default;

    virtual ParamStore& params() = 0;
    virtual std::size_t num_tasks() const = 0;
    virtual std::string task_name(std::size_t task) const = 0;
    virtual std::size_t train_size(std::size_t task) const = 0;
    // Mean loss over `items` of `task` at the current parameters, with its
    // gradient for every trainable parameter.
    virtual LossGrad loss_and_grad(std::size_t task, std::span<const std::size_t> items) = 0;
    // Held-out loss used for early stopping; NaN when unavailable.
    virtual double dev_loss() = 0;

    // Number of loss_and_grad() calls so far (each is one forward/backward).
    std::size_t evaluations() const noexcept { return evaluations_; }

protected:
    std::size_t evaluations_ = 0;
};

// Task i, item j contributes ½‖θ − c_ij‖² summed over every trainable entry.
class QuadraticObjective final : public Objective {
public:
    QuadraticObjective(ParamStore& params, std::vector<std::vector<double>> centers);

    ParamStore& params() override { return params_; }
    std::size_t num_tasks() const override { return centers_.size(); }
    std::string task_name(std::size_t task) const override;
    std::size_t train_size(std::size_t task) const override { return centers_.at(task).size(); }
    LossGrad loss_and_grad(std::size_t task, std::span<const std::size_t> items) override;
    // Mean over tasks of the mean item loss.
    double dev_loss() override;

private:
    double item_loss(double center, GradientMap* grad, double weight) const;
    ParamStore& params_;
    std::vector<std::vector<double>> centers_;
};

// Output alphabet of a CTC head: local index -> global symbol id.
class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<int> symbols);
    static Vocabulary union_of(std::span<const synth::LanguageData* const> languages);

    std::size_t size() const noexcept { return symbols_.size(); }
    const std::vector<int>& symbols() const noexcept { return symbols_; }
    int global(int local) const;
    int local(int global) const;
    bool contains(int global) const { return index_.contains(global); }
    std::vector<int> to_local(std::span<const int> globals) const;
    std::vector<int> to_global(std::span<const int> locals) const;

private:
    std::vector<int> symbols_;
    std::map<int, int> index_;
};

// CTC training of a Model on one or more languages. When the leading backbone
// blocks are frozen their output is computed once per utterance and reused;
// the cache assumes trainable flags do not change during the objective's life.
class CtcObjective final : public Objective {
public:
    CtcObjective(model::Model& model, std::vector<const synth::LanguageData*> languages, Vocabulary vocab);

    ParamStore& params() override { return model_.params(); }
    std::size_t num_tasks() const override { return languages_.size(); }
    std::string task_name(std::size_t task) const override { return languages_.at(task)->code; }
    std::size_t train_size(std::size_t task) const override { return languages_.at(task)->train.size(); }
    LossGrad loss_and_grad(std::size_t task, std::span<const std::size_t> items) override;
    // Mean over languages of the mean dev-utterance CTC loss.
    double dev_loss() override;

    const Vocabulary& vocabulary() const noexcept { return vocab_; }
    std::size_t cached_blocks() const noexcept { return start_block_; }

private:
    const Tensor& hidden(std::size_t task, bool dev, std::size_t index);

    model::Model& model_;
    std::vector<const synth::LanguageData*> languages_;
    Vocabulary vocab_;
    bool use_cache_ = false;
    std::size_t start_block_ = 0;
    std::map<std::tuple<std::size_t, bool, std::size_t>, Tensor> cache_;
};

// --- training loops ---------------------------------------------------------

struct StepInfo {
    std::size_t step = 0;  // 1-based
    std::size_t task = 0;
    std::span<const std::size_t> support;  // FOMAML only
    std::span<const std::size_t> query;    // the batch whose gradient was applied
    double loss = 0.0;
    const ParamStore* params = nullptr;    // after the update
};

using StepObserver = std::function<void(const StepInfo&)>;

struct TrainResult {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;  // 0 when no dev loss was available
    double best_dev_loss = 0.0;
    std::size_t steps = 0;
    std::vector<double> epoch_train_loss;
    std::vector<double> epoch_dev_loss;
    TrainLog log;
};

// Multitask training: each step samples a task uniformly, then a batch from
// it, and takes one Adam step at mtl_lr. Early stopping on dev_loss restores
// the best parameters.
TrainResult train_mtl(Objective& objective, const AdaptationConfig& cfg, const std::string& phase = "ia_mtl",
                      const StepObserver& observer = {});

// First-order MAML: per step, split the batch into support/query, take
// inner_steps SGD steps at alpha on the support set, evaluate the query
// gradient at the adapted point and apply it at the original point with the
// outer optimizer at beta.
TrainResult train_fomaml(Objective& objective, const AdaptationConfig& cfg, const std::string& phase = "ia_fomaml",
                         const StepObserver& observer = {});

TrainResult train(Objective& objective, const AdaptationConfig& cfg, const std::string& phase,
                  const StepObserver& observer = {});

// --- model-level operations -------------------------------------------------

struct WarmResult {
    model::Model model;
    Vocabulary vocabulary;
    TrainResult training;
};

// Warms θ_a and θ_d on the sources with θ_s frozen. The head is rebuilt over
// the union of source alphabets first.
WarmResult ia_mtl(const model::Model& model, std::span<const synth::LanguageData* const> sources,
                  AdaptationConfig cfg);
WarmResult ia_fomaml(const model::Model& model, std::span<const synth::LanguageData* const> sources,
                     AdaptationConfig cfg);
WarmResult intermediate_adaptation(const model::Model& model, std::span<const synth::LanguageData* const> sources,
                                   const AdaptationConfig& cfg);

// Greedy-decoded error counts on one split, compared in global symbol ids.
metrics::ErrorCounts evaluate(const model::Model& model, const Vocabulary& vocab, const synth::LanguageData& lang,
                              std::string_view split);

struct FinetuneResult {
    model::Model model;
    Vocabulary vocabulary;
    metrics::EvalReport report;  // one row: (target, "test")
    TrainResult training;
};

// Marks the groups each mode trains: peft -> adapter + downstream + head;
// freeze_ft -> downstream + head; full_ft -> everything present.
void apply_mode(model::Model& model, FinetuneMode mode);

// Step-0 state of fine-tuning: a copy of `warm` with the CTC head
// reinitialised to the target alphabet and the mode's groups marked trainable.
model::Model prepare_finetune(const model::Model& warm, const synth::LanguageData& target, FinetuneMode mode,
                              const FinetuneConfig& cfg);

// Reinitialises the CTC head to the target alphabet, trains the groups the
// mode designates on the target's train split (early stopping on its dev
// split) and reports test CER. max_epochs = 0 evaluates the step-0 model.
FinetuneResult finetune_target(const model::Model& warm, const synth::LanguageData& target, FinetuneMode mode,
                               const FinetuneConfig& cfg);

struct JointResult {
    model::Model model;
    Vocabulary vocabulary;
    metrics::EvalReport report;  // one test row per target
    TrainResult training;
};

// S&T-MTL baseline: one multitask run over sources ∪ targets with a head
// over the joint alphabet, evaluated on each target without fine-tuning.
JointResult run_baseline_st_mtl(const model::Model& model, std::span<const synth::LanguageData* const> sources,
                                std::span<const synth::LanguageData* const> targets, AdaptationConfig cfg);

// Trains backbone + downstream (no adapters) on the pre-training pool so the
// backbone has seen some languages before it is frozen for good.
struct PretrainConfig {
    double lr = 1e-3;
    std::size_t batch_size = 8;
    std::size_t epochs = 3;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const PretrainConfig& cfg);
PretrainConfig pretrain_config_from_json(const nlohmann::json& doc, PretrainConfig base = {});

struct PretrainResult {
    model::Model model;
    TrainResult training;
};

PretrainResult pretrain_backbone(const model::ModelConfig& cfg, std::span<const synth::LanguageData* const> pool,
                                 const PretrainConfig& pcfg, std::uint64_t model_seed);

}  // namespace iadapt::adapt
