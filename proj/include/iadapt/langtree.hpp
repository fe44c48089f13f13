// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Linguistic family tree with LCA-depth similarity and top-M source selection.
//
// Depth counts edges from the root (depth(root) == 0). The similarity of a
// language l to a target set T is the sum over t in T of depth(lca(l, t)).

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace iadapt::langtree {

using NodeId = std::size_t;

struct NodeSpec {
    NodeId id = 0;
    std::string name;
    std::optional<std::string> code;
    std::optional<NodeId> parent;
};

class LanguageTree {
public:
    // Validates: ids are 0..n-1, exactly one root, acyclic, all nodes
    // reachable, codes unique and only on leaves.
    static LanguageTree from_nodes(std::span<const NodeSpec> nodes);

    // Nested {name, code?, children[]} objects; ids assigned in pre-order.
    static LanguageTree from_json(const nlohmann::json& doc);
    static LanguageTree load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    std::size_t size() const noexcept { return nodes_.size(); }
    NodeId root() const noexcept { return root_; }

    const std::string& name(NodeId n) const;
    const std::optional<std::string>& code(NodeId n) const;
    std::optional<NodeId> parent(NodeId n) const;
    std::span<const NodeId> children(NodeId n) const;
    bool is_leaf(NodeId n) const;

    NodeId node_of(std::string_view code) const;
    bool has_code(std::string_view code) const;
    // Leaf codes in pre-order.
    std::vector<std::string> leaf_codes() const;

    std::size_t depth(NodeId n) const;
    NodeId lca(NodeId a, NodeId b) const;

    std::vector<NodeSpec> nodes() const;

private:
    struct Node {
        std::string name;
        std::optional<std::string> code;
        std::optional<NodeId> parent;
        std::vector<NodeId> children;
        std::size_t depth = 0;
    };

    void check(NodeId n) const;

    std::vector<Node> nodes_;
    NodeId root_ = 0;
    std::unordered_map<std::string, NodeId> by_code_;
};

std::size_t sim(const LanguageTree& tree, std::string_view language, std::span<const std::string> targets);

struct SelectionRequest {
    std::vector<std::string> targets;
    std::vector<std::string> candidates;  // empty: every leaf
    std::size_t m = 0;
};

struct ScoredLanguage {
    std::string code;
    std::size_t sim = 0;
};

// Every candidate not in the targets, ranked by (−sim, code).
std::vector<ScoredLanguage> rank_candidates(const LanguageTree& tree, const SelectionRequest& request);

// Top-M of rank_candidates(); throws insufficient_candidates if fewer than M
// candidates remain after excluding the targets.
std::vector<std::string> select_sources(const LanguageTree& tree, const SelectionRequest& request);

}  // namespace iadapt::langtree
