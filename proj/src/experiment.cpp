// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>

#include "iadapt/error.hpp"
#include "iadapt/seed.hpp"

namespace iadapt::exp {

namespace fs = std::filesystem;
using adapt::FinetuneMode;
using model::Model;

const std::vector<std::string> kAllMethods{"ia_mtl", "ia_fomaml", "peft", "freeze_ft", "full_ft", "st_mtl"};

namespace {

std::string_view to_string(SourceMode m) {
    switch (m) {
        case SourceMode::automatic: return "auto";
        case SourceMode::explicit_list: return "explicit";
        case SourceMode::random: return "random";
    }
    return "?";
}

SourceMode parse_source_mode(std::string_view text) {
    if (text == "auto") return SourceMode::automatic;
    if (text == "explicit") return SourceMode::explicit_list;
    if (text == "random") return SourceMode::random;
    fail(ErrorKind::invalid_config, "unknown source mode '" + std::string(text) + "' (auto, explicit, random)");
}

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const fs::path& base_dir) {
    ExperimentConfig c;
    try {
        const int version = j.value("schema_version", kSchemaVersion);
        if (!(version == kSchemaVersion)) {
            fail(ErrorKind::invalid_config, "unsupported experiment schema_version " + std::to_string(version));
        }
        if (j.contains("tree")) {
            if (j["tree"].is_string()) {
                fs::path p = j["tree"].get<std::string>();
                c.tree_file = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
            } else {
                c.tree_inline = j["tree"];
            }
        }
        if (j.contains("generator")) c.generator = synth::gen_config_from_json(j["generator"]);
        if (j.contains("length")) c.length = synth::length_config_from_json(j["length"]);
        if (j.contains("profile")) c.profile = synth::parse_profile(j["profile"].get<std::string>());
        if (j.contains("source_profile")) c.source_profile = synth::parse_profile(j["source_profile"].get<std::string>());
        if (j.contains("pretrain") && !j["pretrain"].is_null()) {
            const auto& p = j["pretrain"];
            c.pretrain_languages = p.value("languages", c.pretrain_languages);
            c.pretrain = adapt::pretrain_config_from_json(p, c.pretrain);
        }
        c.targets = j.value("targets", c.targets);
        if (j.contains("sources")) {
            const auto& s = j["sources"];
            if (s.contains("mode")) c.sources.mode = parse_source_mode(s["mode"].get<std::string>());
            c.sources.m = s.value("m", c.sources.m);
            if (s.contains("candidates") && s["candidates"].is_array()) {
                c.sources.candidates = s["candidates"].get<std::vector<std::string>>();
            }
            c.sources.codes = s.value("codes", c.sources.codes);
        }
        c.methods = j.value("methods", c.methods);
        c.seeds = j.value("seeds", c.seeds);
        if (j.contains("model")) c.model = model::model_config_from_json(j["model"]);
        if (j.contains("ia")) c.ia = adapt::adaptation_config_from_json(j["ia"], c.ia);
        c.st_mtl = c.ia;
        c.st_mtl.algorithm = adapt::Algorithm::mtl;
        if (j.contains("st_mtl")) c.st_mtl = adapt::adaptation_config_from_json(j["st_mtl"], c.st_mtl);
        if (j.contains("finetune")) c.finetune = adapt::finetune_config_from_json(j["finetune"], c.finetune);
        if (j.contains("selection_study") && !j["selection_study"].is_null()) {
            const auto& s = j["selection_study"];
            c.selection.m_values = s.value("m_values", c.selection.m_values);
            c.selection.strategies = s.value("strategies", c.selection.strategies);
            if (s.contains("algorithm")) c.selection.algorithm = adapt::parse_algorithm(s["algorithm"].get<std::string>());
        }
        if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
        c.write_logs = j.value("write_logs", c.write_logs);
        c.verbose = j.value("verbose", c.verbose);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("experiment config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
    std::ifstream in(path);
    if (!(in.good())) {
        fail(ErrorKind::io, "cannot open experiment config " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, path.string() + ": " + e.what());
    }
    return experiment_config_from_json(doc, path.parent_path());
}

nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["tree"] = c.tree_file.empty() ? c.tree_inline : nlohmann::json(c.tree_file.string());
    j["generator"] = synth::to_json(c.generator);
    j["length"] = synth::to_json(c.length);
    j["profile"] = synth::to_string(c.profile);
    j["source_profile"] = synth::to_string(c.source_profile);
    if (c.pretrain_languages.empty()) {
        j["pretrain"] = nullptr;
    } else {
        j["pretrain"] = adapt::to_json(c.pretrain);
        j["pretrain"]["languages"] = c.pretrain_languages;
    }
    j["targets"] = c.targets;
    j["sources"] = {{"mode", std::string(to_string(c.sources.mode))},
                    {"m", c.sources.m},
                    {"candidates", c.sources.candidates.empty() ? nlohmann::json("all")
                                                                : nlohmann::json(c.sources.candidates)},
                    {"codes", c.sources.codes}};
    j["methods"] = c.methods;
    j["seeds"] = c.seeds;
    j["model"] = model::to_json(c.model);
    j["ia"] = adapt::to_json(c.ia);
    j["st_mtl"] = adapt::to_json(c.st_mtl);
    j["finetune"] = adapt::to_json(c.finetune);
    j["selection_study"] = {{"m_values", c.selection.m_values},
                            {"strategies", c.selection.strategies},
                            {"algorithm", std::string(adapt::to_string(c.selection.algorithm))}};
    j["output_dir"] = c.output_dir.string();
    j["write_logs"] = c.write_logs;
    j["verbose"] = c.verbose;
    return j;
}

langtree::LanguageTree load_tree(const ExperimentConfig& cfg) {
    if (!cfg.tree_file.empty()) return langtree::LanguageTree::load(cfg.tree_file);
    require(!cfg.tree_inline.is_null(), ErrorKind::invalid_config, "experiment config has no tree");
    return langtree::LanguageTree::from_json(cfg.tree_inline);
}

void validate(const ExperimentConfig& c, const langtree::LanguageTree& tree) {
    auto check_codes = [&](const std::vector<std::string>& codes, const std::string& what) {
        for (const std::string& code : codes) {
            if (!(tree.has_code(code))) {
                fail(ErrorKind::invalid_config, what + " code '" + code + "' is not a tree leaf");
            }
        }
    };
    require(!c.seeds.empty(), ErrorKind::invalid_config, "seeds list is empty");
    require(!c.targets.empty(), ErrorKind::invalid_config, "no target languages");
    check_codes(c.targets, "target");
    check_codes(c.pretrain_languages, "pretrain");
    check_codes(c.sources.candidates, "candidate");
    check_codes(c.sources.codes, "source");
    for (const std::string& m : c.methods) {
        if (!(std::find(kAllMethods.begin(), kAllMethods.end(), m) != kAllMethods.end())) {
            fail(ErrorKind::invalid_config, "unknown method '" + m + "'");
        }
    }
    for (const std::string& s : c.selection.strategies) {
        if (!(s == "tree" || s == "random")) {
            fail(ErrorKind::invalid_config, "unknown selection strategy '" + s + "'");
        }
    }
    if (c.sources.mode == SourceMode::explicit_list) {
        require(!c.sources.codes.empty(), ErrorKind::invalid_config, "explicit source mode needs codes");
    }
    require(c.generator.input_dim == c.model.backbone.input_dim, ErrorKind::invalid_config,
            "generator input_dim must equal the backbone input_dim");
    c.model.validate();
    c.ia.validate();
    c.st_mtl.validate();
    c.finetune.validate();
}

std::vector<std::string> random_sources(const langtree::LanguageTree& tree, const langtree::SelectionRequest& req,
                                        std::uint64_t seed) {
    // rank_candidates validates and de-duplicates; its order is then discarded.
    std::vector<std::string> pool;
    for (const auto& s : langtree::rank_candidates(tree, req)) pool.push_back(s.code);
    std::sort(pool.begin(), pool.end());
    require(req.m >= 1, ErrorKind::invalid_argument, "M must be positive");
    if (!(req.m <= pool.size())) {
        fail(ErrorKind::insufficient_candidates, "requested M=" + std::to_string(req.m) + " but only " + std::to_string(pool.size()) + " candidates remain");
    }
    Rng rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);
    pool.resize(req.m);
    std::sort(pool.begin(), pool.end());
    return pool;
}

double mean(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!(out.good())) {
        fail(ErrorKind::io, "cannot write " + path.string());
    }
    return out;
}

double rate(const metrics::ErrorCounts& c) {
    return c.ref_len == 0 ? 0.0 : static_cast<double>(c.edits) / static_cast<double>(c.ref_len);
}

void write_counts(std::ostream& os, const metrics::ErrorCounts& c, double cer) {
    os << c.n_utts << ',' << c.edits << ',' << c.ref_len << ',' << metrics::format_rate(cer) << '\n';
}

// Keyed aggregation preserving first-seen order of the keys.
template <typename Row, typename KeyFn>
std::vector<std::pair<std::string, std::vector<const Row*>>> group_by(const std::vector<Row>& rows, KeyFn key) {
    std::vector<std::pair<std::string, std::vector<const Row*>>> groups;
    for (const Row& r : rows) {
        const std::string k = key(r);
        auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == k; });
        if (it == groups.end()) {
            groups.emplace_back(k, std::vector<const Row*>{});
            it = groups.end() - 1;
        }
        it->second.push_back(&r);
    }
    return groups;
}

template <typename Row>
metrics::ErrorCounts pooled(const std::vector<const Row*>& rows) {
    metrics::ErrorCounts c;
    for (const Row* r : rows) {
        c.n_utts += r->counts.n_utts;
        c.edits += r->counts.edits;
        c.ref_len += r->counts.ref_len;
    }
    return c;
}

template <typename Row>
std::vector<double> rates(const std::vector<const Row*>& rows) {
    std::vector<double> v;
    for (const Row* r : rows) v.push_back(rate(r->counts));
    return v;
}

}  // namespace

void write_results_csv(const fs::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out = open_out(path);
    out << "method,target,seed,n_utts,edits,ref_len,cer\n";
    for (const ResultRow& r : rows) {
        out << r.method << ',' << r.target << ',' << r.seed << ',';
        write_counts(out, r.counts, rate(r.counts));
    }
    // Mean rows: per (method, target) over seeds, then per method over all.
    for (const auto& [key, group] : group_by(rows, [](const ResultRow& r) { return r.method + ',' + r.target; })) {
        out << key << ",mean,";
        write_counts(out, pooled(group), mean(rates(group)));
    }
    for (const auto& [method, group] : group_by(rows, [](const ResultRow& r) { return r.method; })) {
        out << method << ",all,mean,";
        write_counts(out, pooled(group), mean(rates(group)));
    }
}

void write_summary_csv(const fs::path& path, const std::vector<ResultRow>& rows) {
    std::ofstream out = open_out(path);
    out << "method,target,n_seeds,mean_cer,std_cer\n";
    for (const auto& [key, group] : group_by(rows, [](const ResultRow& r) { return r.method + ',' + r.target; })) {
        const auto v = rates(group);
        out << key << ',' << v.size() << ',' << metrics::format_rate(mean(v)) << ','
            << metrics::format_rate(stddev(v)) << '\n';
    }
    // Method-level: spread over seeds of the per-seed mean across targets.
    for (const auto& [method, group] : group_by(rows, [](const ResultRow& r) { return r.method; })) {
        std::map<std::uint64_t, std::vector<double>> by_seed;
        for (const ResultRow* r : group) by_seed[r->seed].push_back(rate(r->counts));
        std::vector<double> per_seed;
        for (const auto& [seed, v] : by_seed) per_seed.push_back(mean(v));
        out << method << ",all," << per_seed.size() << ',' << metrics::format_rate(mean(rates(group))) << ','
            << metrics::format_rate(stddev(per_seed)) << '\n';
    }
}

void write_selection_csv(const fs::path& path, const std::vector<SelectionRow>& rows) {
    std::ofstream out = open_out(path);
    out << "strategy,m,target,seed,n_utts,edits,ref_len,cer\n";
    for (const SelectionRow& r : rows) {
        out << r.strategy << ',' << r.m << ',' << r.target << ',' << r.seed << ',';
        write_counts(out, r.counts, rate(r.counts));
    }
    for (const auto& [key, group] :
         group_by(rows, [](const SelectionRow& r) { return r.strategy + ',' + std::to_string(r.m); })) {
        out << key << ",all,mean,";
        write_counts(out, pooled(group), mean(rates(group)));
    }
}

void write_selection_summary_csv(const fs::path& path, const std::vector<SelectionRow>& rows) {
    std::ofstream out = open_out(path);
    out << "strategy,m,n_seeds,mean_cer,std_cer\n";
    for (const auto& [key, group] :
         group_by(rows, [](const SelectionRow& r) { return r.strategy + ',' + std::to_string(r.m); })) {
        std::map<std::uint64_t, std::vector<double>> by_seed;
        for (const SelectionRow* r : group) by_seed[r->seed].push_back(rate(r->counts));
        std::vector<double> per_seed;
        for (const auto& [seed, v] : by_seed) per_seed.push_back(mean(v));
        out << key << ',' << per_seed.size() << ',' << metrics::format_rate(mean(rates(group))) << ','
            << metrics::format_rate(stddev(per_seed)) << '\n';
    }
}

namespace {

class Runner {
public:
    Runner(const ExperimentConfig& cfg, const langtree::LanguageTree& tree) : cfg_(cfg), tree_(tree) {}

    void run_seed(std::uint64_t seed, ExperimentResult& result);

private:
    template <typename Fn>
    auto stage(const std::string& name, std::uint64_t seed, Fn&& fn) {
        if (cfg_.verbose) std::clog << "[seed " << seed << "] " << name << std::endl;
        try {
            return fn();
        } catch (const Error& e) {
            throw Error(e.kind(), "stage '" + name + "' (seed " + std::to_string(seed) + "): " + e.what());
        }
    }

    bool wants(const std::string& method) const {
        return std::find(cfg_.methods.begin(), cfg_.methods.end(), method) != cfg_.methods.end();
    }

    std::vector<std::string> pick_sources(SourceMode mode, std::size_t m, std::uint64_t seed) const;
    void save_log(std::uint64_t seed, const std::string& name, const adapt::TrainLog& log) const;

    const ExperimentConfig& cfg_;
    const langtree::LanguageTree& tree_;
};

std::vector<std::string> Runner::pick_sources(SourceMode mode, std::size_t m, std::uint64_t seed) const {
    langtree::SelectionRequest req;
    req.targets = cfg_.targets;
    req.candidates = cfg_.sources.candidates.empty() ? tree_.leaf_codes() : cfg_.sources.candidates;
    req.m = m;
    switch (mode) {
        case SourceMode::automatic: return langtree::select_sources(tree_, req);
        case SourceMode::random: return random_sources(tree_, req, derive_seed(seed, "exp.random_sources", m));
        case SourceMode::explicit_list: return cfg_.sources.codes;
    }
    return {};
}

void Runner::save_log(std::uint64_t seed, const std::string& name, const adapt::TrainLog& log) const {
    if (!cfg_.write_logs || cfg_.output_dir.empty()) return;
    const fs::path dir = cfg_.output_dir / "logs" / ("seed" + std::to_string(seed));
    fs::create_directories(dir);
    std::ofstream out = open_out(dir / (name + ".csv"));
    log.write_csv(out);
}

void Runner::run_seed(std::uint64_t seed, ExperimentResult& result) {
    const std::vector<std::string> main_sources =
        stage("select_sources", seed, [&] { return pick_sources(cfg_.sources.mode, cfg_.sources.m, seed); });
    for (const std::string& s : main_sources) {
        if (!(std::find(cfg_.targets.begin(), cfg_.targets.end(), s) == cfg_.targets.end())) {
            fail(ErrorKind::invalid_config, "source " + s + " is also a target");
        }
    }
    result.sources[seed]["main"] = main_sources;

    // Selection-study source sets; the main set is reused when it coincides.
    std::vector<std::tuple<std::string, std::size_t, std::vector<std::string>>> study;
    if (cfg_.selection.enabled()) {
        for (const std::string& strategy : cfg_.selection.strategies) {
            for (std::size_t m : cfg_.selection.m_values) {
                const SourceMode mode = strategy == "tree" ? SourceMode::automatic : SourceMode::random;
                auto codes = stage("select_sources " + strategy + "@" + std::to_string(m), seed,
                                   [&] { return pick_sources(mode, m, seed); });
                result.sources[seed][strategy + "@" + std::to_string(m)] = codes;
                study.emplace_back(strategy, m, std::move(codes));
            }
        }
    }

    // Data: one synthetic family per seed; only the languages in use.
    std::set<std::string> source_codes(main_sources.begin(), main_sources.end());
    for (const auto& [s, m, codes] : study) source_codes.insert(codes.begin(), codes.end());
    source_codes.insert(cfg_.pretrain_languages.begin(), cfg_.pretrain_languages.end());
    for (const std::string& t : cfg_.targets) source_codes.erase(t);

    const synth::Dataset data = stage("datagen", seed, [&] {
        const synth::Family family = synth::generate_family(tree_, derive_seed(seed, "exp.family"), cfg_.generator);
        const std::uint64_t data_seed = derive_seed(seed, "exp.data");
        synth::Dataset d = synth::make_dataset(family, cfg_.targets, cfg_.profile, data_seed, cfg_.length,
                                               cfg_.generator.global_vocab);
        synth::Dataset s = synth::make_dataset(family, {source_codes.begin(), source_codes.end()}, cfg_.source_profile,
                                               data_seed, cfg_.length, cfg_.generator.global_vocab);
        d.languages.merge(s.languages);
        return d;
    });
    auto langs = [&](const std::vector<std::string>& codes) {
        std::vector<const synth::LanguageData*> out;
        for (const std::string& c : codes) out.push_back(&data.at(c));
        return out;
    };
    const auto targets = langs(cfg_.targets);

    // Backbone: pre-trained on the pool, or left at its random init.
    const std::uint64_t model_seed = derive_seed(seed, "exp.model");
    Model base = Model::build(cfg_.model, model_seed);
    if (!cfg_.pretrain_languages.empty()) {
        stage("pretrain", seed, [&] {
            adapt::PretrainConfig pc = cfg_.pretrain;
            pc.seed = derive_seed(seed, "exp.pretrain", pc.seed);
            auto pre = adapt::pretrain_backbone(cfg_.model, langs(cfg_.pretrain_languages), pc, model_seed);
            save_log(seed, "pretrain", pre.training.log);
            base.copy_group_from(pre.model, ParamGroup::backbone);
            return 0;
        });
    }
    const std::uint64_t backbone_hash = base.hash(ParamGroup::backbone);

    adapt::FinetuneConfig ft = cfg_.finetune;
    ft.seed = derive_seed(seed, "exp.finetune", ft.seed);
    auto record = [&](const std::string& method, const metrics::EvalReport& report) {
        for (const metrics::EvalRow& row : report.rows) result.rows.push_back({method, row.language, seed, row.counts});
    };
    auto finetune_all = [&](const std::string& method, const Model& start, FinetuneMode mode) {
        metrics::EvalReport report;
        for (const synth::LanguageData* t : targets) {
            stage(method + " finetune " + t->code, seed, [&] {
                auto r = adapt::finetune_target(start, *t, mode, ft);
                if (mode != FinetuneMode::full_ft) {
                    if (!(r.model.hash(ParamGroup::backbone) == backbone_hash)) {
                        fail(ErrorKind::invalid_argument, "backbone changed during " + method);
                    }
                }
                save_log(seed, method + "." + t->code, r.training.log);
                report.rows.insert(report.rows.end(), r.report.rows.begin(), r.report.rows.end());
                return 0;
            });
        }
        return report;
    };

    auto run_ia = [&](const std::string& label, const std::vector<std::string>& codes, adapt::Algorithm algo) {
        return stage(label, seed, [&] {
            adapt::AdaptationConfig ia = cfg_.ia;
            ia.algorithm = algo;
            ia.seed = derive_seed(seed, "exp.ia", ia.seed);
            auto warm = adapt::intermediate_adaptation(base, langs(codes), ia);
            if (!(warm.model.hash(ParamGroup::backbone) == backbone_hash)) {
                fail(ErrorKind::invalid_argument, "backbone changed during " + label);
            }
            save_log(seed, label, warm.training.log);
            return warm;
        });
    };

    std::optional<metrics::EvalReport> main_tree_report;
    for (const std::string& method : cfg_.methods) {
        if (method == "ia_mtl" || method == "ia_fomaml") {
            const auto algo = method == "ia_mtl" ? adapt::Algorithm::mtl : adapt::Algorithm::fomaml;
            const adapt::WarmResult warm = run_ia(method, main_sources, algo);
            auto report = finetune_all(method, warm.model, FinetuneMode::peft);
            if (algo == cfg_.selection.algorithm && cfg_.sources.mode == SourceMode::automatic) {
                main_tree_report = report;
            }
            record(method, report);
        } else if (method == "peft" || method == "freeze_ft") {
            record(method, finetune_all(method, base, adapt::parse_finetune_mode(method)));
        } else if (method == "full_ft") {
            // Full fine-tuning never instantiates adapters.
            model::ModelConfig bare = cfg_.model;
            bare.adapter = model::AdapterConfig::none();
            Model m = Model::build(bare, model_seed);
            m.copy_group_from(base, ParamGroup::backbone);
            record(method, finetune_all(method, m, FinetuneMode::full_ft));
        } else if (method == "st_mtl") {
            stage("st_mtl", seed, [&] {
                adapt::AdaptationConfig st = cfg_.st_mtl;
                st.seed = derive_seed(seed, "exp.st_mtl", st.seed);
                auto joint = adapt::run_baseline_st_mtl(base, langs(main_sources), targets, st);
                require(joint.model.hash(ParamGroup::backbone) == backbone_hash, ErrorKind::invalid_argument,
                        "backbone changed during st_mtl");
                save_log(seed, "st_mtl", joint.training.log);
                record(method, joint.report);
                return 0;
            });
        }
    }

    for (const auto& [strategy, m, codes] : study) {
        metrics::EvalReport report;
        if (strategy == "tree" && main_tree_report && codes == main_sources) {
            report = *main_tree_report;
        } else {
            const std::string label = "select_" + strategy + std::to_string(m);
            const adapt::WarmResult warm = run_ia(label, codes, cfg_.selection.algorithm);
            report = finetune_all(label, warm.model, FinetuneMode::peft);
        }
        for (const metrics::EvalRow& row : report.rows) {
            result.selection_rows.push_back({strategy, m, row.language, seed, row.counts});
        }
    }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    const langtree::LanguageTree tree = load_tree(cfg);
    validate(cfg, tree);
    ExperimentResult result;
    Runner runner(cfg, tree);
    for (std::uint64_t seed : cfg.seeds) runner.run_seed(seed, result);

    std::map<std::string, std::vector<double>> by_method, by_selection;
    for (const ResultRow& r : result.rows) by_method[r.method].push_back(rate(r.counts));
    for (const auto& [m, v] : by_method) result.method_mean_cer[m] = mean(v);
    for (const SelectionRow& r : result.selection_rows) {
        by_selection[r.strategy + "@" + std::to_string(r.m)].push_back(rate(r.counts));
    }
    for (const auto& [k, v] : by_selection) result.selection_mean_cer[k] = mean(v);

    if (!cfg.output_dir.empty()) {
        fs::create_directories(cfg.output_dir);
        {
            std::ofstream out = open_out(cfg.output_dir / "resolved_config.json");
            out << to_json(cfg).dump(2) << '\n';
        }
        write_results_csv(cfg.output_dir / "results.csv", result.rows);
        write_summary_csv(cfg.output_dir / "summary.csv", result.rows);
        if (!result.selection_rows.empty()) {
            write_selection_csv(cfg.output_dir / "selection.csv", result.selection_rows);
            write_selection_summary_csv(cfg.output_dir / "selection_summary.csv", result.selection_rows);
        }
        nlohmann::json sources;
        for (const auto& [seed, sets] : result.sources) sources[std::to_string(seed)] = sets;
        std::ofstream out = open_out(cfg.output_dir / "sources.json");
        out << sources.dump(2) << '\n';
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

}  // namespace iadapt::exp
