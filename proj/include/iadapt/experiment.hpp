// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end experiment: per seed, generate the synthetic family, optionally
// pre-train the backbone, pick sources, run every requested method on every
// target, and write per-(method, target, seed) CER tables plus summaries.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "iadapt/adaptation.hpp"
#include "iadapt/langtree.hpp"
#include "iadapt/metrics.hpp"
#include "iadapt/model.hpp"
#include "iadapt/synthdata.hpp"

namespace iadapt::exp {

constexpr int kSchemaVersion = 1;

enum class SourceMode { automatic, explicit_list, random };

struct SourceConfig {
    SourceMode mode = SourceMode::automatic;
    std::size_t m = 10;
    std::vector<std::string> candidates;  // empty: every leaf
    std::vector<std::string> codes;       // explicit mode
};

struct SelectionStudy {
    std::vector<std::size_t> m_values;
    std::vector<std::string> strategies{"tree", "random"};
    adapt::Algorithm algorithm = adapt::Algorithm::mtl;

    bool enabled() const { return !m_values.empty(); }
};

struct ExperimentConfig {
    std::filesystem::path tree_file;
    nlohmann::json tree_inline;  // used when tree_file is empty
    synth::GenConfig generator;
    synth::LengthConfig length;
    synth::Profile profile = synth::Profile::ten_min;         // targets
    synth::Profile source_profile = synth::Profile::ten_min;  // sources and pre-training pool
    std::vector<std::string> pretrain_languages;
    adapt::PretrainConfig pretrain;
    std::vector<std::string> targets;
    SourceConfig sources;
    std::vector<std::string> methods{"ia_mtl", "ia_fomaml", "peft", "freeze_ft", "full_ft", "st_mtl"};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    model::ModelConfig model;
    adapt::AdaptationConfig ia;
    adapt::AdaptationConfig st_mtl;
    adapt::FinetuneConfig finetune;
    SelectionStudy selection;
    std::filesystem::path output_dir;
    bool write_logs = true;
    bool verbose = false;  // stage progress on stderr
};

extern const std::vector<std::string> kAllMethods;

// Values missing from `doc` keep their defaults. Relative tree paths resolve
// against `base_dir`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

langtree::LanguageTree load_tree(const ExperimentConfig& cfg);

// Throws invalid_config when codes are not leaves, seeds are empty, etc.
void validate(const ExperimentConfig& cfg, const langtree::LanguageTree& tree);

struct ResultRow {
    std::string method;
    std::string target;
    std::uint64_t seed = 0;
    metrics::ErrorCounts counts;
};

struct SelectionRow {
    std::string strategy;
    std::size_t m = 0;
    std::string target;
    std::uint64_t seed = 0;
    metrics::ErrorCounts counts;
};

struct ExperimentResult {
    std::vector<ResultRow> rows;
    std::vector<SelectionRow> selection_rows;
    // seed -> strategy label -> sources
    std::map<std::uint64_t, std::map<std::string, std::vector<std::string>>> sources;
    // method -> mean over seeds and targets of the per-target test CER
    std::map<std::string, double> method_mean_cer;
    // "<strategy>@<m>" -> mean CER
    std::map<std::string, double> selection_mean_cer;
    double wall_seconds = 0.0;
};

// Random source choice: M distinct eligible candidates, sorted by code.
std::vector<std::string> random_sources(const langtree::LanguageTree& tree, const langtree::SelectionRequest& req,
                                        std::uint64_t seed);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// Writers used by run_experiment (exposed for tests).
void write_results_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
void write_summary_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
void write_selection_csv(const std::filesystem::path& path, const std::vector<SelectionRow>& rows);
void write_selection_summary_csv(const std::filesystem::path& path, const std::vector<SelectionRow>& rows);

double mean(const std::vector<double>& v);
// Sample standard deviation (n − 1); 0 for fewer than two values.
double stddev(const std::vector<double>& v);

}  // namespace iadapt::exp
