// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "iadapt/error.hpp"
#include "iadapt/langtree.hpp"
#include "oracles.hpp"

using namespace iadapt;
using namespace iadapt::langtree;

namespace {

LanguageTree build(const oracle::ParentTree& t) {
    std::vector<NodeSpec> specs;
    for (std::size_t i = 0; i < t.parent.size(); ++i) {
        NodeSpec s;
        s.id = i;
        s.name = "n" + std::to_string(i);
        if (!t.code[i].empty()) s.code = t.code[i];
        if (t.parent[i] >= 0) s.parent = static_cast<NodeId>(t.parent[i]);
        specs.push_back(s);
    }
    return LanguageTree::from_nodes(specs);
}

std::vector<std::string> leaves(const oracle::ParentTree& t) {
    std::vector<std::string> out;
    for (const auto& c : t.code)
        if (!c.empty()) out.push_back(c);
    return out;
}

const char* kFigure = R"({"name": "Root", "children": [
  {"name": "Indo-European", "children": [
    {"name": "Germanic", "children": [
      {"name": "English", "code": "eng"}, {"name": "Swedish", "code": "swe"},
      {"name": "Luxembourgish", "code": "ltz"}, {"name": "Ndebele", "code": "nbl"}]},
    {"name": "Celtic", "children": [{"name": "Manx Gaelic", "code": "glv"}]}]}]})";

}  // namespace

TEST_CASE("lca, depth, sim and selection match root-path oracles on random trees") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 2 + rng() % 49;
        const oracle::ParentTree ot = oracle::random_tree(n, rng);
        const LanguageTree tree = build(ot);
        for (std::size_t a = 0; a < n; ++a) {
            CHECK(tree.depth(a) == ot.depth(static_cast<int>(a)));
            for (std::size_t b = 0; b < n; ++b) CHECK(tree.lca(a, b) == static_cast<NodeId>(ot.lca(int(a), int(b))));
        }
        const auto codes = leaves(ot);
        if (codes.size() < 2) continue;
        std::vector<std::string> targets;
        for (const auto& c : codes)
            if (rng() % 3 == 0) targets.push_back(c);
        if (targets.empty()) targets.push_back(codes[0]);
        if (targets.size() == codes.size()) targets.pop_back();
        for (const auto& c : codes) CHECK(sim(tree, c, targets) == ot.sim(c, targets));
        const std::size_t pool = codes.size() - targets.size();
        const std::size_t m = 1 + rng() % pool;
        SelectionRequest req{targets, {}, m};
        CHECK(select_sources(tree, req) == ot.select(targets, codes, m));
    }
}

TEST_CASE("family example similarities and selection") {
    const LanguageTree tree = LanguageTree::from_json(nlohmann::json::parse(kFigure));
    const std::vector<std::string> targets{"eng", "swe"};
    CHECK(sim(tree, "ltz", targets) == 4);
    CHECK(sim(tree, "nbl", targets) == 4);
    CHECK(sim(tree, "glv", targets) == 2);
    SelectionRequest req{targets, {}, 2};
    CHECK(select_sources(tree, req) == std::vector<std::string>{"ltz", "nbl"});
    req.m = 3;
    CHECK(select_sources(tree, req) == std::vector<std::string>{"ltz", "nbl", "glv"});
}

TEST_CASE("root depth is zero and lca is symmetric and idempotent") {
    const LanguageTree tree = LanguageTree::from_json(nlohmann::json::parse(kFigure));
    CHECK(tree.depth(tree.root()) == 0);
    const NodeId e = tree.node_of("eng"), g = tree.node_of("glv");
    CHECK(tree.lca(e, g) == tree.lca(g, e));
    CHECK(tree.lca(e, e) == e);
    CHECK(tree.depth(e) == 3);
    const NodeId germanic = tree.lca(e, tree.node_of("swe"));
    CHECK(tree.name(germanic) == "Germanic");
    CHECK(tree.depth(germanic) == 2);
}

TEST_CASE("selection respects the candidate list and skips targets") {
    const LanguageTree tree = LanguageTree::from_json(nlohmann::json::parse(kFigure));
    SelectionRequest req{{"eng"}, {"eng", "glv", "swe"}, 2};
    CHECK(select_sources(tree, req) == std::vector<std::string>{"swe", "glv"});
    const auto ranked = rank_candidates(tree, req);
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].sim == 2);
    CHECK(ranked[1].sim == 1);
}

TEST_CASE("selection errors") {
    const LanguageTree tree = LanguageTree::from_json(nlohmann::json::parse(kFigure));
    SelectionRequest too_many{{"eng", "swe"}, {}, 4};
    CHECK_THROWS_AS(select_sources(tree, too_many), Error);
    try {
        select_sources(tree, too_many);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::insufficient_candidates);
    }
    SelectionRequest unknown{{"xxx"}, {}, 1};
    CHECK_THROWS_AS(select_sources(tree, unknown), Error);
    SelectionRequest none{{}, {}, 1};
    CHECK_THROWS_AS(select_sources(tree, none), Error);
}

TEST_CASE("invalid trees are rejected") {
    CHECK_THROWS_AS(LanguageTree::from_nodes(std::vector<NodeSpec>{}), Error);
    // Two roots.
    std::vector<NodeSpec> two{{0, "a", std::nullopt, std::nullopt}, {1, "b", std::nullopt, std::nullopt}};
    CHECK_THROWS_AS(LanguageTree::from_nodes(two), Error);
    // Cycle hanging off the root.
    std::vector<NodeSpec> cyc{{0, "r", std::nullopt, std::nullopt}, {1, "a", std::nullopt, 2}, {2, "b", std::nullopt, 1}};
    CHECK_THROWS_AS(LanguageTree::from_nodes(cyc), Error);
    // Code on an internal node.
    std::vector<NodeSpec> internal{{0, "r", std::nullopt, std::nullopt}, {1, "a", "aa", 0}, {2, "b", "bb", 1}};
    CHECK_THROWS_AS(LanguageTree::from_nodes(internal), Error);
    // Duplicate codes.
    std::vector<NodeSpec> dup{{0, "r", std::nullopt, std::nullopt}, {1, "a", "x", 0}, {2, "b", "x", 0}};
    CHECK_THROWS_AS(LanguageTree::from_nodes(dup), Error);
    CHECK_THROWS_AS(LanguageTree::from_json(nlohmann::json::parse(R"({"children": []})")), Error);
}

TEST_CASE("json round trip preserves structure") {
    const LanguageTree a = LanguageTree::from_json(nlohmann::json::parse(kFigure));
    const LanguageTree b = LanguageTree::from_json(a.to_json());
    CHECK(a.to_json() == b.to_json());
    CHECK(b.leaf_codes() == std::vector<std::string>{"eng", "swe", "ltz", "nbl", "glv"});
    for (NodeId n = 0; n < a.size(); ++n) {
        CHECK(a.name(n) == b.name(n));
        CHECK(a.depth(n) == b.depth(n));
    }
}
