// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "iadapt/adaptation.hpp"
#include "iadapt/ctc.hpp"
#include "iadapt/error.hpp"
#include "iadapt/langtree.hpp"
#include "iadapt/optim.hpp"
#include "iadapt/seed.hpp"

using namespace iadapt;
using namespace iadapt::adapt;
using model::Model;
using num::Tensor;

namespace {

ParamStore scalar_store(double theta) {
    ParamStore s;
    s.add("theta", ParamGroup::adapter, Tensor::vector({theta}), true);
    return s;
}

AdaptationConfig one_step_fomaml() {
    AdaptationConfig c;
    c.algorithm = Algorithm::fomaml;
    c.alpha = 0.1;
    c.beta = 0.1;
    c.outer_optimizer = optim::Kind::sgd;
    c.batch_size = 2;
    c.max_epochs = 1;
    c.steps_per_epoch = 1;
    c.patience = 100;
    return c;
}

std::vector<const synth::LanguageData*> pointers(const synth::Dataset& d, std::initializer_list<const char*> codes) {
    std::vector<const synth::LanguageData*> out;
    for (const char* c : codes) out.push_back(&d.at(c));
    return out;
}

FinetuneConfig quick_finetune() {
    FinetuneConfig f;
    f.lr = 1e-2;
    f.max_epochs = 2;
    f.patience = 2;
    f.seed = 3;
    return f;
}

AdaptationConfig quick_ia(Algorithm a) {
    AdaptationConfig c;
    c.algorithm = a;
    c.mtl_lr = 1e-2;
    c.alpha = 1e-2;
    c.beta = 1e-2;
    c.max_epochs = 2;
    c.steps_per_epoch = 5;
    c.seed = 4;
    return c;
}

}  // namespace

// --- optimizers -------------------------------------------------------------

TEST_CASE("sgd step is theta minus lr times gradient") {
    ParamStore s = scalar_store(1.0);
    GradientMap g{{0, Tensor::vector({0.5})}};
    optim::Sgd(0.2).step(s, g);
    CHECK(s[0].value[0] == doctest::Approx(0.9).epsilon(1e-15));
    optim::Sgd(0.0).step(s, g);
    CHECK(s[0].value[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("adam matches a hand-rolled recursion") {
    ParamStore s = scalar_store(0.3);
    optim::Adam adam(0.01);
    const double grads[] = {0.5, -1.0, 2.0, 0.1};
    double theta = 0.3, m = 0.0, v = 0.0;
    for (int t = 1; t <= 4; ++t) {
        adam.step(s, GradientMap{{0, Tensor::vector({grads[t - 1]})}});
        m = 0.9 * m + 0.1 * grads[t - 1];
        v = 0.999 * v + 0.001 * grads[t - 1] * grads[t - 1];
        const double mh = m / (1 - std::pow(0.9, t)), vh = v / (1 - std::pow(0.999, t));
        theta -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
        CHECK(s[0].value[0] == doctest::Approx(theta).epsilon(1e-14));
    }
    CHECK(adam.steps() == 4);
}

TEST_CASE("adam with a zero gradient leaves parameters unchanged") {
    ParamStore s = scalar_store(2.0);
    optim::Adam adam(0.1);
    adam.step(s, GradientMap{{0, Tensor::vector({0.0})}});
    CHECK(s[0].value[0] == 2.0);
}

TEST_CASE("optimizers refuse gradients for frozen parameters") {
    ParamStore s = scalar_store(1.0);
    s[0].trainable = false;
    CHECK_THROWS_AS(optim::Sgd(0.1).step(s, GradientMap{{0, Tensor::vector({1.0})}}), Error);
    CHECK_THROWS_AS(optim::Adam(0.1).step(s, GradientMap{{7, Tensor::vector({1.0})}}), Error);
}

// --- training loops on the quadratic surrogate ------------------------------

TEST_CASE("first-order MAML closed form on a scalar quadratic") {
    ParamStore s = scalar_store(0.0);
    QuadraticObjective obj(s, {{1.0, 3.0}});  // support item 0, query item 1
    std::vector<std::size_t> seen_support, seen_query;
    train_fomaml(obj, one_step_fomaml(), "t", [&](const StepInfo& info) {
        seen_support.assign(info.support.begin(), info.support.end());
        seen_query.assign(info.query.begin(), info.query.end());
    });
    CHECK(seen_support == std::vector<std::size_t>{0});
    CHECK(seen_query == std::vector<std::size_t>{1});
    CHECK(std::abs(s[0].value[0] - 0.29) < 1e-10);
    CHECK(obj.evaluations() == 2);
}

TEST_CASE("with alpha = 0 first-order MAML is gradient descent on the query batches") {
    for (optim::Kind outer : {optim::Kind::sgd, optim::Kind::adam}) {
        ParamStore a;
        a.add("w", ParamGroup::adapter, Tensor::vector({0.5, -1.0}), true);
        a.add("b", ParamGroup::downstream_body, Tensor::vector({2.0}), true);
        ParamStore b = a;
        const std::vector<std::vector<double>> centers{{1, 2, 3, 4, 5, 6, 7, 8}, {-1, 0, 1, 2, 3, 4, 5, 6}};
        QuadraticObjective meta(a, centers), plain(b, centers);
        AdaptationConfig c;
        c.algorithm = Algorithm::fomaml;
        c.alpha = 0.0;
        c.beta = 0.05;
        c.outer_optimizer = outer;
        c.batch_size = 4;
        c.max_epochs = 3;
        c.steps_per_epoch = 6;
        c.patience = 100;
        std::unique_ptr<optim::Optimizer> opt = optim::make(outer, c.beta);
        std::size_t steps = 0;
        double worst = 0.0;
        train_fomaml(meta, c, "t", [&](const StepInfo& info) {
            opt->step(b, plain.loss_and_grad(info.task, info.query).grad);
            for (ParamId id = 0; id < a.size(); ++id)
                for (std::size_t i = 0; i < a[id].value.size(); ++i)
                    worst = std::max(worst, std::abs((*info.params)[id].value[i] - b[id].value[i]));
            ++steps;
        });
        CHECK(steps == 18);
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("fomaml rejects batches that cannot be split") {
    ParamStore s = scalar_store(0.0);
    QuadraticObjective obj(s, {{1.0}});
    auto c = one_step_fomaml();
    c.batch_size = 1;
    CHECK_THROWS_AS(train_fomaml(obj, c), Error);
}

TEST_CASE("multitask training on one quadratic reaches its minimizer") {
    ParamStore s = scalar_store(0.0);
    QuadraticObjective obj(s, {{1.0, 1.0}});
    AdaptationConfig c;
    c.mtl_lr = 0.01;
    c.batch_size = 2;
    c.max_epochs = 40;
    c.steps_per_epoch = 50;
    c.patience = 100;
    train_mtl(obj, c);
    CHECK(std::abs(s[0].value[0] - 1.0) < 1e-3);
}

TEST_CASE("multitask training settles at the minimizer of the summed losses") {
    ParamStore s = scalar_store(0.0);
    QuadraticObjective obj(s, {{1.0, 1.0}, {3.0, 3.0}});
    AdaptationConfig c;
    c.mtl_lr = 0.01;
    c.batch_size = 2;
    c.max_epochs = 40;
    c.steps_per_epoch = 50;
    c.patience = 100;
    const TrainResult r = train_mtl(obj, c);
    CHECK(std::abs(s[0].value[0] - 2.0) < 1e-2);
    CHECK(r.steps == 2000);
    CHECK(r.epoch_dev_loss.back() < r.epoch_dev_loss.front());
}

TEST_CASE("one inner step costs one support and one query evaluation") {
    ParamStore s = scalar_store(0.0);
    QuadraticObjective obj(s, {{1, 2, 3, 4}, {5, 6, 7, 8}});
    auto c = one_step_fomaml();
    c.batch_size = 4;
    c.steps_per_epoch = 7;
    c.max_epochs = 2;
    train_fomaml(obj, c);
    CHECK(obj.evaluations() == 2 * 14);
    c.inner_steps = 3;
    QuadraticObjective obj3(s, {{1, 2, 3, 4}});
    train_fomaml(obj3, c);
    CHECK(obj3.evaluations() == 4 * 14);
}

TEST_CASE("the first adam step moves each entry by the learning rate") {
    ParamStore s;
    s.add("w", ParamGroup::adapter, Tensor::vector({1.0, -2.0, 0.5}), true);
    optim::Adam adam(1e-3);
    adam.step(s, GradientMap{{0, Tensor::vector({4.0, -0.01, 0.3})}});
    CHECK(s[0].value[0] == doctest::Approx(1.0 - 1e-3).epsilon(1e-9));
    CHECK(s[0].value[1] == doctest::Approx(-2.0 + 1e-3).epsilon(1e-9));
    CHECK(s[0].value[2] == doctest::Approx(0.5 - 1e-3).epsilon(1e-9));
}

TEST_CASE("early stopping restores the best epoch") {
    ParamStore s = scalar_store(0.0);
    QuadraticObjective obj(s, {{1.0}});
    AdaptationConfig c;
    c.mtl_lr = 0.4;  // large enough to overshoot and oscillate
    c.batch_size = 1;
    c.max_epochs = 30;
    c.steps_per_epoch = 1;
    c.patience = 2;
    const TrainResult r = train_mtl(obj, c);
    CHECK(r.best_epoch >= 1);
    CHECK(r.epochs_run <= 30);
    CHECK(obj.dev_loss() == doctest::Approx(r.best_dev_loss).epsilon(1e-14));
    for (double d : r.epoch_dev_loss) CHECK(d >= r.best_dev_loss);
}

TEST_CASE("uniform task sampling visits every task") {
    ParamStore s = scalar_store(0.0);
    QuadraticObjective obj(s, {{1.0}, {2.0}, {3.0}});
    std::vector<int> counts(3, 0);
    AdaptationConfig c;
    c.batch_size = 1;
    c.max_epochs = 1;
    c.steps_per_epoch = 3000;
    train_mtl(obj, c, "t", [&](const StepInfo& info) { ++counts[info.task]; });
    for (int n : counts) CHECK(std::abs(n - 1000) < 120);
}

TEST_CASE("train log csv layout") {
    TrainLog log;
    log.rows.push_back({"ia_mtl", 1, 10, "eng+swe", 1.5, std::nan(""), 2.0});
    std::ostringstream os;
    log.write_csv(os);
    CHECK(os.str() == "phase,epoch,step,language,loss,dev_loss,wall_ms\nia_mtl,1,10,eng+swe,1.500000,nan,2.000000\n");
}

// --- CTC objective and model-level operations -------------------------------

TEST_CASE("vocabulary maps between local and global ids") {
    const auto d = fixture::small_dataset();
    const auto langs = pointers(d, {"eng", "glv"});
    const Vocabulary v = Vocabulary::union_of(langs);
    std::set<int> expect(d.at("eng").alphabet.begin(), d.at("eng").alphabet.end());
    expect.insert(d.at("glv").alphabet.begin(), d.at("glv").alphabet.end());
    CHECK(v.symbols() == std::vector<int>(expect.begin(), expect.end()));
    for (int i = 0; i < static_cast<int>(v.size()); ++i) CHECK(v.local(v.global(i)) == i);
    CHECK_THROWS_AS(v.local(99), Error);
}

TEST_CASE("ctc objective gradient equals the mean over the batch") {
    const auto d = fixture::small_dataset();
    auto cfg = fixture::small_model(6, 3);
    Model m = Model::build(cfg, 2);
    m.params().freeze_all();
    apply_mode(m, FinetuneMode::peft);
    const synth::LanguageData& eng = d.at("eng");
    const Vocabulary vocab(eng.alphabet);
    CtcObjective obj(m, {&eng}, vocab);
    CHECK(obj.cached_blocks() == 1);
    const std::vector<std::size_t> items{1, 4, 9};
    const LossGrad lg = obj.loss_and_grad(0, items);

    double loss = 0.0;
    GradientMap sum;
    for (std::size_t i : items) {
        num::Tape tape;
        const auto labels = vocab.to_local(eng.train[i].labels);
        const num::Var l = ctc::loss(tape, m.forward(tape, eng.train[i].features), labels);
        loss += tape.value(l)[0] / 3.0;
        for (auto& [id, g] : tape.backward(l)) {
            auto it = sum.try_emplace(id, Tensor(g.shape(), 0.0)).first;
            it->second.axpy_inplace(1.0 / 3.0, g);
        }
    }
    CHECK(lg.loss == doctest::Approx(loss).epsilon(1e-12));
    REQUIRE(lg.grad.size() == sum.size());
    for (const auto& [id, g] : sum) {
        CHECK(m.params()[id].trainable);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(lg.grad.at(id)[i] == doctest::Approx(g[i]).epsilon(1e-10));
    }
}

TEST_CASE("apply_mode marks the documented groups") {
    Model m = Model::build(fixture::small_model(), 1);
    auto flags = [&](ParamGroup g) {
        for (const Parameter& p : m.params())
            if (p.group == g) return p.trainable;
        return false;
    };
    apply_mode(m, FinetuneMode::peft);
    CHECK_FALSE(flags(ParamGroup::backbone));
    CHECK(flags(ParamGroup::adapter));
    CHECK(flags(ParamGroup::downstream_body));
    CHECK(flags(ParamGroup::ctc_head));
    apply_mode(m, FinetuneMode::freeze_ft);
    CHECK_FALSE(flags(ParamGroup::backbone));
    CHECK_FALSE(flags(ParamGroup::adapter));
    CHECK(flags(ParamGroup::downstream_body));
    apply_mode(m, FinetuneMode::full_ft);
    CHECK(flags(ParamGroup::backbone));
}

TEST_CASE("intermediate adaptation leaves the backbone untouched") {
    const auto d = fixture::small_dataset();
    const Model base = Model::build(fixture::small_model(6, 3), 8);
    const auto sources = pointers(d, {"ltz", "nbl"});
    for (Algorithm a : {Algorithm::mtl, Algorithm::fomaml}) {
        const WarmResult w = intermediate_adaptation(base, sources, quick_ia(a));
        CHECK(w.model.hash(ParamGroup::backbone) == base.hash(ParamGroup::backbone));
        CHECK(w.model.hash(ParamGroup::adapter) != base.hash(ParamGroup::adapter));
        CHECK(w.model.vocab_size() == Vocabulary::union_of(sources).size());
        CHECK(w.training.steps > 0);
    }
}

TEST_CASE("fine-tuning starts from the warm parameters with a fresh head") {
    const auto d = fixture::small_dataset();
    const Model base = Model::build(fixture::small_model(6, 3), 8);
    const WarmResult w = ia_mtl(base, pointers(d, {"ltz", "nbl"}), quick_ia(Algorithm::mtl));
    const synth::LanguageData& target = d.at("eng");
    FinetuneConfig f = quick_finetune();
    const Model start = prepare_finetune(w.model, target, FinetuneMode::peft, f);
    CHECK(start.vocab_size() == target.alphabet.size());
    for (ParamGroup g : {ParamGroup::backbone, ParamGroup::adapter, ParamGroup::downstream_body})
        CHECK(start.hash(g) == w.model.hash(g));
    const Model expected = model::reinit_ctc_head(w.model, target.alphabet.size(),
                                                  derive_seed(f.seed, "finetune.head." + target.code));
    CHECK(start.hash(ParamGroup::ctc_head) == expected.hash(ParamGroup::ctc_head));
    CHECK(start.hash(ParamGroup::ctc_head) != w.model.hash(ParamGroup::ctc_head));
    for (const Parameter& p : start.params()) {
        if (p.group != ParamGroup::ctc_head) continue;
        const Parameter& old = w.model.params()[*w.model.params().find(p.name)];
        for (std::size_t i = 0; i < std::min(p.value.size(), old.value.size()); ++i) CHECK(p.value[i] != old.value[i]);
    }

    f.max_epochs = 0;
    const FinetuneResult zero = finetune_target(w.model, target, FinetuneMode::peft, f);
    CHECK(zero.model.hash(ParamGroup::ctc_head) == start.hash(ParamGroup::ctc_head));
    CHECK(zero.training.steps == 0);
}

TEST_CASE("fine-tuning modes touch only their groups") {
    const auto d = fixture::small_dataset();
    Model base = Model::build(fixture::small_model(6, 3), 8);
    const synth::LanguageData& target = d.at("swe");
    const FinetuneResult peft = finetune_target(base, target, FinetuneMode::peft, quick_finetune());
    CHECK(peft.model.hash(ParamGroup::backbone) == base.hash(ParamGroup::backbone));
    CHECK(peft.model.hash(ParamGroup::adapter) != base.hash(ParamGroup::adapter));
    const FinetuneResult frz = finetune_target(base, target, FinetuneMode::freeze_ft, quick_finetune());
    CHECK(frz.model.hash(ParamGroup::backbone) == base.hash(ParamGroup::backbone));
    CHECK(frz.model.hash(ParamGroup::adapter) == base.hash(ParamGroup::adapter));
    CHECK(frz.model.hash(ParamGroup::downstream_body) != base.hash(ParamGroup::downstream_body));
    auto plain_cfg = fixture::small_model(6, 3);
    plain_cfg.adapter = model::AdapterConfig::none();
    const Model plain = Model::build(plain_cfg, 8);
    const FinetuneResult full = finetune_target(plain, target, FinetuneMode::full_ft, quick_finetune());
    CHECK(full.model.hash(ParamGroup::backbone) != plain.hash(ParamGroup::backbone));
    REQUIRE(peft.report.rows.size() == 1);
    CHECK(peft.report.rows[0].language == "swe");
    CHECK(peft.report.rows[0].counts.n_utts == target.test.size());
}

TEST_CASE("evaluate counts errors in global symbol ids") {
    const auto d = fixture::small_dataset();
    const synth::LanguageData& lang = d.at("glv");
    const Vocabulary vocab(lang.alphabet);
    Model m = Model::build(fixture::small_model(6, lang.alphabet.size()), 3);
    const auto counts = evaluate(m, vocab, lang, "dev");
    std::size_t edits = 0, ref = 0;
    for (const auto& u : lang.dev) {
        const auto hyp = vocab.to_global(ctc::greedy_decode(m.log_probs(u.features)));
        edits += metrics::edit_distance(u.labels, hyp);
        ref += u.labels.size();
    }
    CHECK(counts.n_utts == lang.dev.size());
    CHECK(counts.edits == edits);
    CHECK(counts.ref_len == ref);
    const Model wrong = Model::build(fixture::small_model(6, lang.alphabet.size() + 1), 3);
    CHECK_THROWS_AS(evaluate(wrong, vocab, lang, "dev"), Error);
}

TEST_CASE("joint baseline covers sources and targets with one head") {
    const auto d = fixture::small_dataset();
    const Model base = Model::build(fixture::small_model(6, 3), 8);
    const auto sources = pointers(d, {"ltz"});
    const auto targets = pointers(d, {"eng", "swe"});
    const JointResult j = run_baseline_st_mtl(base, sources, targets, quick_ia(Algorithm::mtl));
    std::vector<const synth::LanguageData*> all{&d.at("ltz"), &d.at("eng"), &d.at("swe")};
    CHECK(j.vocabulary.symbols() == Vocabulary::union_of(all).symbols());
    CHECK(j.model.hash(ParamGroup::backbone) == base.hash(ParamGroup::backbone));
    REQUIRE(j.report.rows.size() == 2);
    CHECK(j.report.rows[0].language == "eng");
    CHECK(j.report.rows[1].language == "swe");
}

TEST_CASE("joint baseline without sources trains on the target alone") {
    const auto d = fixture::small_dataset();
    const Model base = Model::build(fixture::small_model(6, 3), 8);
    const auto targets = pointers(d, {"eng"});
    const JointResult j = run_baseline_st_mtl(base, {}, targets, quick_ia(Algorithm::mtl));
    CHECK(j.vocabulary.symbols() == d.at("eng").alphabet);
    CHECK(j.model.hash(ParamGroup::backbone) == base.hash(ParamGroup::backbone));
    REQUIRE(j.report.rows.size() == 1);
}

TEST_CASE("ten-source warm-up lowers the epoch-average loss for five epochs") {
    langtree::LanguageTree tree = langtree::LanguageTree::load(IADAPT_CONFIG_DIR "/default_tree.json");
    synth::GenConfig g;
    g.noise_scale = 2.0;
    const auto family = synth::generate_family(tree, 21, g);
    const std::vector<std::string> targets{"kax", "kay"};
    const auto sources = langtree::select_sources(tree, {targets, {}, 10});
    const auto data = synth::make_dataset(family, sources, synth::Profile::ten_min, 21);
    std::vector<const synth::LanguageData*> ptrs;
    for (const auto& c : sources) ptrs.push_back(&data.at(c));
    AdaptationConfig c;
    c.mtl_lr = 1e-3;
    c.max_epochs = 5;
    c.patience = 5;
    c.seed = 21;
    const WarmResult w = ia_mtl(Model::build(model::ModelConfig{}, 21), ptrs, c);
    const auto& loss = w.training.epoch_train_loss;
    REQUIRE(loss.size() == 5);
    for (std::size_t e = 1; e < loss.size(); ++e) CHECK(loss[e] < loss[e - 1]);
}

TEST_CASE("pre-training updates the backbone and then freezes it") {
    const auto d = fixture::small_dataset();
    auto cfg = fixture::small_model(6, 3);
    PretrainConfig p;
    p.epochs = 1;
    p.lr = 1e-2;
    const auto pool = pointers(d, {"glv"});
    const PretrainResult r = pretrain_backbone(cfg, pool, p, 3);
    CHECK_FALSE(r.model.has_adapters());
    CHECK(r.model.backbone_frozen());
    CHECK(r.training.steps == 8);  // 64 utterances / batch 8
    const Model fresh = Model::build([&] { auto c = cfg; c.adapter = model::AdapterConfig::none(); return c; }(),
                                     derive_seed(3, "pretrain.model"));
    CHECK(r.model.hash(ParamGroup::backbone) != fresh.hash(ParamGroup::backbone));
}

TEST_CASE("config json round trips") {
    AdaptationConfig a = quick_ia(Algorithm::fomaml);
    a.outer_optimizer = optim::Kind::sgd;
    const AdaptationConfig b = adaptation_config_from_json(to_json(a));
    CHECK(to_json(b) == to_json(a));
    CHECK_THROWS_AS(adaptation_config_from_json(nlohmann::json{{"algorithm", "reptile"}}), Error);
    CHECK_THROWS_AS(adaptation_config_from_json(nlohmann::json{{"support_fraction", 1.0}}), Error);
    const FinetuneConfig f = finetune_config_from_json(to_json(quick_finetune()));
    CHECK(to_json(f) == to_json(quick_finetune()));
}
