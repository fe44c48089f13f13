// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Tree-structured synthetic "languages". Every tree node owns a latent matrix
// with one row per global symbol (plus one row for the separator frame). A
// leaf's emission prototypes are the sum of the latents of its ancestors plus
// a leaf-specific perturbation, so languages that share more ancestry emit
// more similar frames. Alphabets are picked the same way: each node adds a
// random score per symbol and a leaf keeps its top-scoring symbols.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "iadapt/langtree.hpp"
#include "iadapt/tensor.hpp"

namespace iadapt::synth {

using num::Tensor;

struct GenConfig {
    std::size_t input_dim = 20;
    std::size_t global_vocab = 16;
    std::size_t alphabet_size = 10;
    double latent_scale = 1.0;   // std of every internal node's latent entries
    double leaf_scale = 0.5;     // std of the leaf perturbation
    double noise_scale = 1.0;    // per-frame Gaussian noise
    double alphabet_jitter = 0.5;  // leaf-level noise on the alphabet scores
    // P(k frames) for k = 1..size(); normalised on use.
    std::vector<double> repeat_weights{0.6, 0.4};

    void validate() const;
};

struct LengthConfig {
    std::size_t min_symbols = 3;
    std::size_t max_symbols = 6;

    void validate() const;
};

struct LanguageSpec {
    std::string code;
    std::vector<int> alphabet;  // sorted global symbol ids
    Tensor prototypes;          // (alphabet.size(), input_dim), row i for alphabet[i]
    Tensor separator;           // (1, input_dim)
    double noise_scale = 0.0;
    std::vector<double> repeat_weights;
};

using Family = std::map<std::string, LanguageSpec>;

Family generate_family(const langtree::LanguageTree& tree, std::uint64_t seed, const GenConfig& cfg);

struct Utterance {
    Tensor features;          // (T, input_dim)
    std::vector<int> labels;  // global symbol ids
};

// Frames: separator, then for each symbol k >= 1 frames of its prototype
// followed by one separator. T = 1 + U + Σk >= 2U + 1.
Utterance sample_utterance(const LanguageSpec& spec, std::uint64_t seed, const LengthConfig& length);

enum class Profile { ten_min, one_hour };

std::string_view to_string(Profile profile);
Profile parse_profile(std::string_view text);
std::size_t train_count(Profile profile);
constexpr std::size_t kDevCount = 32;
constexpr std::size_t kTestCount = 64;

struct LanguageData {
    std::string code;
    std::vector<int> alphabet;
    std::vector<Utterance> train;
    std::vector<Utterance> dev;
    std::vector<Utterance> test;

    const std::vector<Utterance>& split(std::string_view name) const;
};

struct Dataset {
    Profile profile = Profile::ten_min;
    std::size_t global_vocab = 0;
    std::map<std::string, LanguageData> languages;

    const LanguageData& at(const std::string& code) const;
};

// Seed of utterance `index` in `split` of language `code`. Each split draws
// from its own tagged stream.
std::uint64_t utterance_seed(std::uint64_t seed, std::string_view code, std::string_view split, std::size_t index);

Dataset make_dataset(const Family& specs, Profile profile, std::uint64_t seed, const LengthConfig& length = {},
                     std::size_t global_vocab = 0);

// Restricts generation to `codes` (all languages when empty).
Dataset make_dataset(const Family& specs, const std::vector<std::string>& codes, Profile profile,
                     std::uint64_t seed, const LengthConfig& length = {}, std::size_t global_vocab = 0);

// Glyph for a global symbol id: a..z, then A..Z, then s<id>.
std::string glyph(int symbol);

// On disk: <dir>/<code>.<split>.jsonl, <dir>/vocab.json (symbol id -> glyph),
// <dir>/languages.json (code -> alphabet, plus profile).
void write_dataset(const std::filesystem::path& dir, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& dir);

void write_split(const std::filesystem::path& path, const std::string& code, std::string_view split,
                 const std::vector<Utterance>& utts);
std::vector<Utterance> read_split(const std::filesystem::path& path);

nlohmann::json to_json(const GenConfig& cfg);
GenConfig gen_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const LengthConfig& cfg);
LengthConfig length_config_from_json(const nlohmann::json& doc);

}  // namespace iadapt::synth
