// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "iadapt/langtree.hpp"
#include "iadapt/model.hpp"
#include "iadapt/synthdata.hpp"

namespace fixture {

// Small enough for exhaustive finite differences (a few thousand parameters).
inline iadapt::model::ModelConfig small_model(std::size_t input_dim = 6, std::size_t vocab = 3) {
    iadapt::model::ModelConfig c;
    c.backbone = {2, 8, 16, 2, input_dim};
    c.adapter = iadapt::model::AdapterConfig::top_blocks(2, 1, 3);
    c.downstream = {1, 6, 8, 2, vocab};
    return c;
}

inline const char* kFamilyJson = R"({"name": "Root", "children": [
  {"name": "Indo-European", "children": [
    {"name": "Germanic", "children": [
      {"name": "English", "code": "eng"}, {"name": "Swedish", "code": "swe"},
      {"name": "Luxembourgish", "code": "ltz"}, {"name": "Ndebele", "code": "nbl"}]},
    {"name": "Celtic", "children": [{"name": "Manx Gaelic", "code": "glv"}]}]}]})";

inline iadapt::langtree::LanguageTree family_tree() {
    return iadapt::langtree::LanguageTree::from_json(nlohmann::json::parse(kFamilyJson));
}

inline iadapt::synth::GenConfig small_generator() {
    iadapt::synth::GenConfig g;
    g.input_dim = 6;
    g.global_vocab = 6;
    g.alphabet_size = 3;
    return g;
}

inline iadapt::synth::Dataset small_dataset(std::uint64_t seed = 5) {
    const auto family = iadapt::synth::generate_family(family_tree(), seed, small_generator());
    return iadapt::synth::make_dataset(family, iadapt::synth::Profile::ten_min, seed,
                                       iadapt::synth::LengthConfig{2, 3}, 6);
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               ("iadapt_test_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
};

}  // namespace fixture
