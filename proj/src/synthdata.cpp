// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/synthdata.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "iadapt/error.hpp"
#include "iadapt/seed.hpp"

namespace iadapt::synth {

void GenConfig::validate() const {
    require(input_dim >= 1, ErrorKind::invalid_config, "input_dim must be positive");
    require(global_vocab >= 1, ErrorKind::invalid_config, "global_vocab must be positive");
    require(alphabet_size >= 1 && alphabet_size <= global_vocab, ErrorKind::invalid_config,
            "alphabet_size must be in [1, global_vocab]");
    require(latent_scale >= 0 && leaf_scale >= 0 && noise_scale >= 0 && alphabet_jitter >= 0,
            ErrorKind::invalid_config, "scales must be non-negative");
    require(!repeat_weights.empty(), ErrorKind::invalid_config, "repeat distribution is empty");
    double total = 0.0;
    for (double w : repeat_weights) {
        require(w >= 0, ErrorKind::invalid_config, "repeat weights must be non-negative");
        total += w;
    }
    require(total > 0, ErrorKind::invalid_config, "repeat weights sum to zero");
}

void LengthConfig::validate() const {
    require(min_symbols >= 1 && min_symbols <= max_symbols, ErrorKind::invalid_config,
            "need 1 <= min_symbols <= max_symbols");
}

namespace {

void add_normal(std::span<double> out, Rng& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : out) v += stddev * dist(rng);
}

}  // namespace

Family generate_family(const langtree::LanguageTree& tree, std::uint64_t seed, const GenConfig& cfg) {
    cfg.validate();
    const std::size_t rows = cfg.global_vocab + 1;  // last row: separator
    const std::size_t n = tree.size();

    // Internal-node latents and alphabet scores, drawn in node-id order.
    std::vector<Tensor> latent(n);
    std::vector<std::vector<double>> score(n);
    for (langtree::NodeId id = 0; id < n; ++id) {
        if (tree.is_leaf(id)) continue;
        latent[id] = Tensor({rows, cfg.input_dim}, 0.0);
        Rng rng = make_rng(seed, "synth.latent", id);
        add_normal(latent[id].data(), rng, cfg.latent_scale);
        score[id].assign(cfg.global_vocab, 0.0);
        Rng srng = make_rng(seed, "synth.alphabet", id);
        add_normal(score[id], srng, 1.0);
    }

    Family family;
    for (const std::string& code : tree.leaf_codes()) {
        const langtree::NodeId leaf = tree.node_of(code);
        Tensor proto({rows, cfg.input_dim}, 0.0);
        std::vector<double> s(cfg.global_vocab, 0.0);
        for (auto a = tree.parent(leaf); a; a = tree.parent(*a)) {
            proto.add_inplace(latent[*a]);
            for (std::size_t v = 0; v < s.size(); ++v) s[v] += score[*a][v];
        }
        Rng prng = make_rng(seed, "synth.leaf." + code);
        add_normal(proto.data(), prng, cfg.leaf_scale);
        Rng arng = make_rng(seed, "synth.leaf_alphabet." + code);
        add_normal(s, arng, cfg.alphabet_jitter);

        std::vector<int> order(cfg.global_vocab);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s[a] > s[b]; });
        std::vector<int> alphabet(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.alphabet_size));
        std::sort(alphabet.begin(), alphabet.end());

        LanguageSpec spec;
        spec.code = code;
        spec.alphabet = alphabet;
        spec.prototypes = Tensor({alphabet.size(), cfg.input_dim}, 0.0);
        for (std::size_t i = 0; i < alphabet.size(); ++i) {
            std::ranges::copy(proto.row(static_cast<std::size_t>(alphabet[i])), spec.prototypes.row(i).begin());
        }
        spec.separator = num::slice_rows(proto, cfg.global_vocab, rows);
        spec.noise_scale = cfg.noise_scale;
        spec.repeat_weights = cfg.repeat_weights;
        family.emplace(code, std::move(spec));
    }
    return family;
}

Utterance sample_utterance(const LanguageSpec& spec, std::uint64_t seed, const LengthConfig& length) {
    length.validate();
    if (!(!spec.alphabet.empty())) {
        fail(ErrorKind::invalid_config, "language " + spec.code + " has an empty alphabet");
    }
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> len_dist(length.min_symbols, length.max_symbols);
    std::uniform_int_distribution<std::size_t> sym_dist(0, spec.alphabet.size() - 1);
    std::discrete_distribution<std::size_t> rep_dist(spec.repeat_weights.begin(), spec.repeat_weights.end());
    std::normal_distribution<double> noise(0.0, 1.0);

    const std::size_t u = len_dist(rng);
    std::vector<std::size_t> symbols(u), reps(u);
    std::size_t frames = 1;
    for (std::size_t i = 0; i < u; ++i) {
        symbols[i] = sym_dist(rng);
        reps[i] = rep_dist(rng) + 1;
        frames += reps[i] + 1;
    }

    const std::size_t dim = spec.prototypes.cols();
    Utterance utt;
    utt.features = Tensor({frames, dim}, 0.0);
    utt.labels.reserve(u);
    std::size_t t = 0;
    auto emit = [&](std::span<const double> proto) {
        auto row = utt.features.row(t++);
        for (std::size_t d = 0; d < dim; ++d) row[d] = proto[d] + spec.noise_scale * noise(rng);
    };
    emit(spec.separator.row(0));
    for (std::size_t i = 0; i < u; ++i) {
        utt.labels.push_back(spec.alphabet[symbols[i]]);
        for (std::size_t k = 0; k < reps[i]; ++k) emit(spec.prototypes.row(symbols[i]));
        emit(spec.separator.row(0));
    }
    return utt;
}

std::string_view to_string(Profile profile) {
    return profile == Profile::ten_min ? "ten_min" : "one_hour";
}

Profile parse_profile(std::string_view text) {
    if (text == "ten_min") return Profile::ten_min;
    if (text == "one_hour") return Profile::one_hour;
    fail(ErrorKind::invalid_config, "unknown profile '" + std::string(text) + "' (expected ten_min or one_hour)");
}

std::size_t train_count(Profile profile) {
    return profile == Profile::ten_min ? 64 : 384;
}

const std::vector<Utterance>& LanguageData::split(std::string_view name) const {
    if (name == "train") return train;
    if (name == "dev") return dev;
    if (name == "test") return test;
    fail(ErrorKind::invalid_argument, "unknown split '" + std::string(name) + "'");
}

const LanguageData& Dataset::at(const std::string& code) const {
    const auto it = languages.find(code);
    if (!(it != languages.end())) {
        fail(ErrorKind::unknown_code, "dataset has no language '" + code + "'");
    }
    return it->second;
}

std::uint64_t utterance_seed(std::uint64_t seed, std::string_view code, std::string_view split, std::size_t index) {
    return derive_seed(seed, "synth.utt." + std::string(code) + "." + std::string(split), index);
}

Dataset make_dataset(const Family& specs, Profile profile, std::uint64_t seed, const LengthConfig& length,
                     std::size_t global_vocab) {
    return make_dataset(specs, {}, profile, seed, length, global_vocab);
}

Dataset make_dataset(const Family& specs, const std::vector<std::string>& codes, Profile profile,
                     std::uint64_t seed, const LengthConfig& length, std::size_t global_vocab) {
    Dataset data;
    data.profile = profile;
    data.global_vocab = global_vocab;
    std::vector<std::string> wanted = codes;
    if (wanted.empty()) {
        for (const auto& [code, spec] : specs) wanted.push_back(code);
    }
    for (const std::string& code : wanted) {
        const auto it = specs.find(code);
        if (!(it != specs.end())) {
            fail(ErrorKind::unknown_code, "no synthetic spec for language '" + code + "'");
        }
        const LanguageSpec& spec = it->second;
        for (int s : spec.alphabet) data.global_vocab = std::max(data.global_vocab, static_cast<std::size_t>(s) + 1);
        LanguageData lang;
        lang.code = code;
        lang.alphabet = spec.alphabet;
        auto fill = [&](std::vector<Utterance>& out, std::string_view split, std::size_t count) {
            out.reserve(count);
            for (std::size_t i = 0; i < count; ++i) {
                out.push_back(sample_utterance(spec, utterance_seed(seed, code, split, i), length));
            }
        };
        fill(lang.train, "train", train_count(profile));
        fill(lang.dev, "dev", kDevCount);
        fill(lang.test, "test", kTestCount);
        data.languages.emplace(code, std::move(lang));
    }
    return data;
}

std::string glyph(int symbol) {
    if (symbol >= 0 && symbol < 26) return std::string(1, static_cast<char>('a' + symbol));
    if (symbol >= 26 && symbol < 52) return std::string(1, static_cast<char>('A' + symbol - 26));
    return "s" + std::to_string(symbol);
}

void write_split(const std::filesystem::path& path, const std::string& code, std::string_view split,
                 const std::vector<Utterance>& utts) {
    std::ofstream out(path, std::ios::binary);
    if (!(out.good())) {
        fail(ErrorKind::io, "cannot write " + path.string());
    }
    for (const Utterance& u : utts) {
        nlohmann::json line;
        line["lang"] = code;
        line["split"] = split;
        line["labels"] = u.labels;
        nlohmann::json frames = nlohmann::json::array();
        for (std::size_t t = 0; t < u.features.rows(); ++t) {
            const auto row = u.features.row(t);
            frames.push_back(std::vector<double>(row.begin(), row.end()));
        }
        line["features"] = std::move(frames);
        out << line.dump() << '\n';
    }
    if (!(out.good())) {
        fail(ErrorKind::io, "write failed for " + path.string());
    }
}

std::vector<Utterance> read_split(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!(in.good())) {
        fail(ErrorKind::io, "cannot open " + path.string());
    }
    std::vector<Utterance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            const nlohmann::json j = nlohmann::json::parse(line);
            Utterance u;
            u.labels = j.at("labels").get<std::vector<int>>();
            const auto frames = j.at("features").get<std::vector<std::vector<double>>>();
            require(!frames.empty() && !frames.front().empty(), ErrorKind::format, "empty feature matrix");
            const std::size_t dim = frames.front().size();
            u.features = Tensor({frames.size(), dim}, 0.0);
            for (std::size_t t = 0; t < frames.size(); ++t) {
                require(frames[t].size() == dim, ErrorKind::format, "ragged feature matrix");
                std::ranges::copy(frames[t], u.features.row(t).begin());
            }
            out.push_back(std::move(u));
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

namespace {

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!(out.good())) {
        fail(ErrorKind::io, "cannot write " + path.string());
    }
    out << doc.dump(2) << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!(in.good())) {
        fail(ErrorKind::io, "cannot open " + path.string());
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, path.string() + ": " + e.what());
    }
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& data) {
    std::filesystem::create_directories(dir);
    nlohmann::json vocab = nlohmann::json::object();
    for (std::size_t s = 0; s < data.global_vocab; ++s) vocab[std::to_string(s)] = glyph(static_cast<int>(s));
    write_json(dir / "vocab.json", vocab);

    nlohmann::json manifest;
    manifest["profile"] = to_string(data.profile);
    manifest["global_vocab"] = data.global_vocab;
    manifest["languages"] = nlohmann::json::object();
    for (const auto& [code, lang] : data.languages) {
        manifest["languages"][code] = {{"alphabet", lang.alphabet}};
        write_split(dir / (code + ".train.jsonl"), code, "train", lang.train);
        write_split(dir / (code + ".dev.jsonl"), code, "dev", lang.dev);
        write_split(dir / (code + ".test.jsonl"), code, "test", lang.test);
    }
    write_json(dir / "languages.json", manifest);
}

Dataset read_dataset(const std::filesystem::path& dir) {
    const nlohmann::json manifest = read_json(dir / "languages.json");
    Dataset data;
    try {
        data.profile = parse_profile(manifest.at("profile").get<std::string>());
        data.global_vocab = manifest.at("global_vocab").get<std::size_t>();
        for (const auto& [code, entry] : manifest.at("languages").items()) {
            LanguageData lang;
            lang.code = code;
            lang.alphabet = entry.at("alphabet").get<std::vector<int>>();
            lang.train = read_split(dir / (code + ".train.jsonl"));
            lang.dev = read_split(dir / (code + ".dev.jsonl"));
            lang.test = read_split(dir / (code + ".test.jsonl"));
            data.languages.emplace(code, std::move(lang));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, (dir / "languages.json").string() + ": " + e.what());
    }
    return data;
}

nlohmann::json to_json(const GenConfig& cfg) {
    return {{"input_dim", cfg.input_dim},         {"global_vocab", cfg.global_vocab},
            {"alphabet_size", cfg.alphabet_size}, {"latent_scale", cfg.latent_scale},
            {"leaf_scale", cfg.leaf_scale},       {"noise_scale", cfg.noise_scale},
            {"alphabet_jitter", cfg.alphabet_jitter}, {"repeat_weights", cfg.repeat_weights}};
}

GenConfig gen_config_from_json(const nlohmann::json& j) {
    GenConfig cfg;
    try {
        cfg.input_dim = j.value("input_dim", cfg.input_dim);
        cfg.global_vocab = j.value("global_vocab", cfg.global_vocab);
        cfg.alphabet_size = j.value("alphabet_size", cfg.alphabet_size);
        cfg.latent_scale = j.value("latent_scale", cfg.latent_scale);
        cfg.leaf_scale = j.value("leaf_scale", cfg.leaf_scale);
        cfg.noise_scale = j.value("noise_scale", cfg.noise_scale);
        cfg.alphabet_jitter = j.value("alphabet_jitter", cfg.alphabet_jitter);
        cfg.repeat_weights = j.value("repeat_weights", cfg.repeat_weights);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("generator config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

nlohmann::json to_json(const LengthConfig& cfg) {
    return {{"min_symbols", cfg.min_symbols}, {"max_symbols", cfg.max_symbols}};
}

LengthConfig length_config_from_json(const nlohmann::json& j) {
    LengthConfig cfg;
    try {
        cfg.min_symbols = j.value("min_symbols", cfg.min_symbols);
        cfg.max_symbols = j.value("max_symbols", cfg.max_symbols);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, std::string("length config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace iadapt::synth
