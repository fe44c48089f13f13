// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Every command prints a JSON summary; `tree sim` and
// `tree select` print their plain answer on stdout and the summary on stderr
// so their output can be piped.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "iadapt/adaptation.hpp"
#include "iadapt/error.hpp"
#include "iadapt/experiment.hpp"
#include "iadapt/langtree.hpp"
#include "iadapt/metrics.hpp"
#include "iadapt/model.hpp"
#include "iadapt/seed.hpp"
#include "iadapt/synthdata.hpp"

namespace fs = std::filesystem;
using namespace iadapt;
using nlohmann::json;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
    std::string config;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        fail(ErrorKind::format, path + ": " + e.what());
    }
}

void write_json_file(const fs::path& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

std::vector<std::string> split_codes(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

fs::path require_out(const Globals& g) {
    require(!g.out.empty(), ErrorKind::invalid_argument, "--out is required");
    fs::create_directories(g.out);
    return g.out;
}

json section(const Globals& g, const char* key) {
    if (g.config.empty()) return json::object();
    const json doc = read_json_file(g.config);
    return doc.contains(key) ? doc[key] : doc;
}

std::vector<const synth::LanguageData*> pick(const synth::Dataset& data, const std::vector<std::string>& codes) {
    std::vector<const synth::LanguageData*> out;
    for (const std::string& c : codes) out.push_back(&data.at(c));
    return out;
}

model::ModelConfig model_config(const std::string& path) {
    return path.empty() ? model::ModelConfig{} : model::model_config_from_json(read_json_file(path));
}

json eval_json(const metrics::EvalReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"language", r.language},
                        {"split", r.split},
                        {"n_utts", r.counts.n_utts},
                        {"edits", r.counts.edits},
                        {"ref_len", r.counts.ref_len},
                        {"cer", r.cer()}});
    }
    return rows;
}

void write_report(const fs::path& path, const metrics::EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot write " + path.string());
    report.write_csv(out);
}

void write_log(const fs::path& path, const adapt::TrainLog& log) {
    std::ofstream out(path, std::ios::binary);
    require(out.good(), ErrorKind::io, "cannot write " + path.string());
    log.write_csv(out);
}

// Label sequences from a file: JSON lines with "labels", or whitespace-
// separated integers one utterance per line.
std::vector<metrics::LabelSequence> read_sequences(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open " + path);
    std::vector<metrics::LabelSequence> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first != std::string::npos && line[first] == '{') {
            try {
                out.push_back(json::parse(line).at("labels").get<metrics::LabelSequence>());
            } catch (const json::exception& e) {
                fail(ErrorKind::format, path + ": " + e.what());
            }
            continue;
        }
        std::istringstream ss(line);
        metrics::LabelSequence seq;
        int v;
        while (ss >> v) seq.push_back(v);
        require(ss.eof(), ErrorKind::format, path + ": non-integer token in '" + line + "'");
        out.push_back(std::move(seq));
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"iadapt: intermediate adaptation toolkit on synthetic language families"};
    app.require_subcommand(1);
    Globals g;
    app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { g.seed = v, g.seed_set = true; },
                                           "Base seed")
        ->capture_default_str();
    app.add_option("--out", g.out, "Output directory");
    app.add_option("--config", g.config, "JSON config file; flags override its values");
    app.fallthrough();

    // tree ------------------------------------------------------------------
    auto* tree = app.add_subcommand("tree", "Linguistic tree queries");
    tree->require_subcommand(1);
    std::string tree_file, lang, targets, candidates = "all";
    std::size_t m = 0;
    auto* sim = tree->add_subcommand("sim", "LCA-depth similarity of one language to the targets");
    sim->add_option("--tree", tree_file)->required();
    sim->add_option("--lang", lang)->required();
    sim->add_option("--targets", targets)->required();
    auto* select = tree->add_subcommand("select", "Top-M source selection");
    select->add_option("--tree", tree_file)->required();
    select->add_option("--targets", targets)->required();
    select->add_option("--candidates", candidates, "Comma-separated codes or 'all'")->capture_default_str();
    select->add_option("--m", m)->required();

    // datagen ---------------------------------------------------------------
    auto* datagen = app.add_subcommand("datagen", "Generate a synthetic dataset from a tree");
    std::string profile = "ten_min", languages;
    datagen->add_option("--tree", tree_file)->required();
    datagen->add_option("--profile", profile)->capture_default_str();
    datagen->add_option("--languages", languages, "Subset of leaf codes (default: all)");

    // pretrain --------------------------------------------------------------
    auto* pretrain = app.add_subcommand("pretrain", "Train the backbone on a pre-training pool");
    std::string data_dir, model_cfg;
    adapt::PretrainConfig pcfg;
    pretrain->add_option("--data", data_dir)->required();
    pretrain->add_option("--languages", languages)->required();
    pretrain->add_option("--model-config", model_cfg);
    pretrain->add_option("--epochs", pcfg.epochs);
    pretrain->add_option("--lr", pcfg.lr);
    pretrain->add_option("--batch-size", pcfg.batch_size);

    // ia ----------------------------------------------------------------------
    auto* ia = app.add_subcommand("ia", "Intermediate adaptation on source languages");
    std::string sources, algorithm, backbone, checkpoint;
    double alpha = 0, beta = 0, lr = 0;
    std::size_t inner = 0, epochs = 0, patience = 0, batch = 0;
    ia->add_option("--data", data_dir)->required();
    ia->add_option("--sources", sources)->required();
    ia->add_option("--backbone", backbone, "Checkpoint whose backbone is copied in");
    ia->add_option("--model-config", model_cfg);
    ia->add_option("--algorithm", algorithm, "mtl or fomaml");
    ia->add_option("--alpha", alpha);
    ia->add_option("--beta", beta);
    ia->add_option("--inner-steps", inner);
    ia->add_option("--lr", lr, "MTL Adam learning rate");
    ia->add_option("--epochs", epochs);
    ia->add_option("--patience", patience);
    ia->add_option("--batch-size", batch);

    // finetune ----------------------------------------------------------------
    auto* finetune = app.add_subcommand("finetune", "Fine-tune to one target and report test CER");
    std::string target, mode = "peft";
    finetune->add_option("--data", data_dir)->required();
    finetune->add_option("--target", target)->required();
    finetune->add_option("--mode", mode, "peft, freeze_ft or full_ft")->capture_default_str();
    finetune->add_option("--checkpoint", checkpoint, "Warm start (e.g. post-IA)");
    finetune->add_option("--backbone", backbone, "Cold start from this backbone");
    finetune->add_option("--model-config", model_cfg);
    finetune->add_option("--lr", lr);
    finetune->add_option("--epochs", epochs);
    finetune->add_option("--patience", patience);
    finetune->add_option("--batch-size", batch);

    // eval --------------------------------------------------------------------
    auto* eval = app.add_subcommand("eval", "CER of hypothesis vs reference sequences, or of a checkpoint");
    std::string ref, hyp, split = "test";
    eval->add_option("--ref", ref);
    eval->add_option("--hyp", hyp);
    eval->add_option("--checkpoint", checkpoint);
    eval->add_option("--data", data_dir);
    eval->add_option("--lang", lang);
    eval->add_option("--split", split)->capture_default_str();

    // experiment --------------------------------------------------------------
    auto* experiment = app.add_subcommand("experiment", "Run the end-to-end experiment described by --config");
    std::string seeds;
    experiment->add_option("--seeds", seeds, "Override the seed list (comma-separated)");
    bool verbose = false;
    experiment->add_flag("--verbose", verbose);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed() || select->parsed()) {
            const auto t = langtree::LanguageTree::load(tree_file);
            const auto tgt = split_codes(targets);
            if (sim->parsed()) {
                const std::size_t s = langtree::sim(t, lang, tgt);
                std::cout << s << '\n';
                std::cerr << json{{"command", "tree sim"}, {"lang", lang}, {"targets", tgt}, {"sim", s}}.dump() << '\n';
            } else {
                langtree::SelectionRequest req{tgt, candidates == "all" ? t.leaf_codes() : split_codes(candidates), m};
                const auto ranked = langtree::rank_candidates(t, req);
                const auto chosen = langtree::select_sources(t, req);
                json scores = json::object();
                for (const auto& r : ranked) scores[r.code] = r.sim;
                for (const auto& c : chosen) std::cout << c << '\n';
                std::cerr << json{{"command", "tree select"}, {"targets", tgt}, {"m", m}, {"selected", chosen},
                                  {"sim", scores}}.dump()
                          << '\n';
            }
            return 0;
        }

        if (datagen->parsed()) {
            const fs::path out = require_out(g);
            const auto t = langtree::LanguageTree::load(tree_file);
            const auto gen = synth::gen_config_from_json(section(g, "generator"));
            const json cfg = g.config.empty() ? json::object() : read_json_file(g.config);
            const auto len = synth::length_config_from_json(cfg.value("length", json::object()));
            const auto family = synth::generate_family(t, derive_seed(g.seed, "exp.family"), gen);
            const auto data = synth::make_dataset(family, split_codes(languages), synth::parse_profile(profile),
                                                  derive_seed(g.seed, "exp.data"), len, gen.global_vocab);
            synth::write_dataset(out, data);
            json langs = json::object();
            for (const auto& [code, l] : data.languages) {
                langs[code] = {{"alphabet", l.alphabet}, {"train", l.train.size()}, {"dev", l.dev.size()},
                               {"test", l.test.size()}};
            }
            std::cout << json{{"command", "datagen"}, {"out", out.string()}, {"seed", g.seed},
                              {"profile", profile}, {"generator", synth::to_json(gen)}, {"languages", langs}}.dump()
                      << '\n';
            return 0;
        }

        if (pretrain->parsed()) {
            const fs::path out = require_out(g);
            pcfg = adapt::pretrain_config_from_json(section(g, "pretrain"), pcfg);
            pcfg.seed = g.seed;
            const auto data = synth::read_dataset(data_dir);
            const auto cfg = model_config(model_cfg);
            auto r = adapt::pretrain_backbone(cfg, pick(data, split_codes(languages)), pcfg, g.seed);
            model::Checkpoint ck{r.model, "pretrain", {}, {{"languages", split_codes(languages)}, {"seed", g.seed}}};
            for (int s : adapt::Vocabulary::union_of(pick(data, split_codes(languages))).symbols()) {
                ck.vocabulary.push_back(s);
            }
            model::save_checkpoint(out / "pretrain.ckpt.json", ck);
            write_log(out / "pretrain.log.csv", r.training.log);
            std::cout << json{{"command", "pretrain"}, {"checkpoint", (out / "pretrain.ckpt.json").string()},
                              {"config", adapt::to_json(pcfg)}, {"epochs_run", r.training.epochs_run},
                              {"final_dev_loss", r.training.epoch_dev_loss.empty() ? 0.0
                                                                                   : r.training.epoch_dev_loss.back()}}
                             .dump()
                      << '\n';
            return 0;
        }

        if (ia->parsed()) {
            const fs::path out = require_out(g);
            adapt::AdaptationConfig cfg = adapt::adaptation_config_from_json(section(g, "ia"));
            if (!algorithm.empty()) cfg.algorithm = adapt::parse_algorithm(algorithm);
            if (ia->count("--alpha")) cfg.alpha = alpha;
            if (ia->count("--beta")) cfg.beta = beta;
            if (ia->count("--inner-steps")) cfg.inner_steps = inner;
            if (ia->count("--lr")) cfg.mtl_lr = lr;
            if (ia->count("--epochs")) cfg.max_epochs = epochs;
            if (ia->count("--patience")) cfg.patience = patience;
            if (ia->count("--batch-size")) cfg.batch_size = batch;
            if (g.seed_set) cfg.seed = g.seed;
            cfg.validate();
            const auto data = synth::read_dataset(data_dir);
            model::Model base = model::Model::build(model_config(model_cfg), derive_seed(cfg.seed, "exp.model"));
            if (!backbone.empty()) base.copy_group_from(model::load_checkpoint(backbone).model, ParamGroup::backbone);
            const auto src = split_codes(sources);
            auto warm = adapt::intermediate_adaptation(base, pick(data, src), cfg);
            model::Checkpoint ck{warm.model, "post-IA", warm.vocabulary.symbols(),
                                 {{"sources", src}, {"adaptation", adapt::to_json(cfg)}}};
            model::save_checkpoint(out / "post_ia.ckpt.json", ck);
            write_log(out / "ia.log.csv", warm.training.log);
            const json run{{"command", "ia"},
                           {"checkpoint", (out / "post_ia.ckpt.json").string()},
                           {"sources", src},
                           {"adaptation", adapt::to_json(cfg)},
                           {"epochs_run", warm.training.epochs_run},
                           {"best_epoch", warm.training.best_epoch},
                           {"best_dev_loss", warm.training.best_dev_loss}};
            write_json_file(out / "run.json", run);
            std::cout << run.dump() << '\n';
            return 0;
        }

        if (finetune->parsed()) {
            const fs::path out = require_out(g);
            adapt::FinetuneConfig cfg = adapt::finetune_config_from_json(section(g, "finetune"));
            if (finetune->count("--lr")) cfg.lr = lr;
            if (finetune->count("--epochs")) cfg.max_epochs = epochs;
            if (finetune->count("--patience")) cfg.patience = patience;
            if (finetune->count("--batch-size")) cfg.batch_size = batch;
            if (g.seed_set) cfg.seed = g.seed;
            cfg.validate();
            const auto data = synth::read_dataset(data_dir);
            const auto fm = adapt::parse_finetune_mode(mode);
            std::optional<model::Model> start;
            if (!checkpoint.empty()) {
                start = model::load_checkpoint(checkpoint).model;
            } else {
                model::ModelConfig mc = model_config(model_cfg);
                if (fm == adapt::FinetuneMode::full_ft) mc.adapter = model::AdapterConfig::none();
                start = model::Model::build(mc, derive_seed(cfg.seed, "exp.model"));
                if (!backbone.empty()) {
                    start->copy_group_from(model::load_checkpoint(backbone).model, ParamGroup::backbone);
                }
            }
            const auto& tgt = data.at(target);
            auto r = adapt::finetune_target(*start, tgt, fm, cfg);
            model::Checkpoint ck{r.model, "finetuned", r.vocabulary.symbols(),
                                 {{"target", target}, {"mode", mode}, {"finetune", adapt::to_json(cfg)}}};
            model::save_checkpoint(out / ("finetuned." + target + ".ckpt.json"), ck);
            write_report(out / ("eval." + target + ".csv"), r.report);
            write_log(out / ("finetune." + target + ".log.csv"), r.training.log);
            std::cout << json{{"command", "finetune"}, {"target", target}, {"mode", mode},
                              {"finetune", adapt::to_json(cfg)}, {"epochs_run", r.training.epochs_run},
                              {"tunable_fraction", model::tunable_fraction(r.model)}, {"report", eval_json(r.report)},
                              {"cer", r.report.aggregate_cer()}}
                             .dump()
                      << '\n';
            return 0;
        }

        if (eval->parsed()) {
            metrics::EvalReport report;
            if (!ref.empty() || !hyp.empty()) {
                require(!ref.empty() && !hyp.empty(), ErrorKind::invalid_argument, "--ref and --hyp go together");
                const auto refs = read_sequences(ref);
                const auto hyps = read_sequences(hyp);
                report.add(lang.empty() ? "-" : lang, split, metrics::count_errors(refs, hyps));
            } else {
                require(!checkpoint.empty() && !data_dir.empty() && !lang.empty(), ErrorKind::invalid_argument,
                        "eval needs --ref/--hyp, or --checkpoint, --data and --lang");
                const auto ck = model::load_checkpoint(checkpoint);
                const auto data = synth::read_dataset(data_dir);
                const adapt::Vocabulary vocab(ck.vocabulary);
                report.add(lang, split, adapt::evaluate(ck.model, vocab, data.at(lang), split));
            }
            if (!g.out.empty()) write_report(require_out(g) / "eval.csv", report);
            std::cout << json{{"command", "eval"}, {"report", eval_json(report)}, {"cer", report.aggregate_cer()}}
                             .dump()
                      << '\n';
            return 0;
        }

        if (experiment->parsed()) {
            require(!g.config.empty(), ErrorKind::invalid_argument, "experiment needs --config");
            exp::ExperimentConfig cfg = exp::load_experiment_config(g.config);
            if (!g.out.empty()) cfg.output_dir = g.out;
            if (!seeds.empty()) {
                cfg.seeds.clear();
                for (const auto& s : split_codes(seeds)) cfg.seeds.push_back(std::stoull(s));
            }
            if (g.seed_set && seeds.empty()) cfg.seeds = {g.seed};
            if (verbose) cfg.verbose = true;
            require(!cfg.output_dir.empty(), ErrorKind::invalid_argument, "experiment needs --out or output_dir");
            const auto r = exp::run_experiment(cfg);
            std::cout << json{{"command", "experiment"},
                              {"out", cfg.output_dir.string()},
                              {"seeds", cfg.seeds},
                              {"method_mean_cer", r.method_mean_cer},
                              {"selection_mean_cer", r.selection_mean_cer},
                              {"wall_seconds", r.wall_seconds}}
                             .dump()
                      << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
