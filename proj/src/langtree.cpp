// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/langtree.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "iadapt/error.hpp"

namespace iadapt::langtree {

LanguageTree LanguageTree::from_nodes(std::span<const NodeSpec> specs) {
    require(!specs.empty(), ErrorKind::invalid_tree, "tree has no nodes");
    LanguageTree tree;
    tree.nodes_.resize(specs.size());
    std::vector<bool> seen(specs.size(), false);
    std::optional<NodeId> root;
    for (const NodeSpec& s : specs) {
        if (!(s.id < specs.size())) {
            fail(ErrorKind::invalid_tree, "node id " + std::to_string(s.id) + " outside 0.." + std::to_string(specs.size() - 1));
        }
        if (!(!seen[s.id])) {
            fail(ErrorKind::invalid_tree, "duplicate node id " + std::to_string(s.id));
        }
        seen[s.id] = true;
        Node& n = tree.nodes_[s.id];
        n.name = s.name;
        n.code = s.code;
        n.parent = s.parent;
        if (!s.parent) {
            require(!root, ErrorKind::invalid_tree, "more than one root");
            root = s.id;
        } else {
            if (!(*s.parent < specs.size())) {
                fail(ErrorKind::invalid_tree, "node " + std::to_string(s.id) + " has unknown parent " + std::to_string(*s.parent));
            }
            if (!(*s.parent != s.id)) {
                fail(ErrorKind::invalid_tree, "node " + std::to_string(s.id) + " is its own parent");
            }
        }
    }
    require(root.has_value(), ErrorKind::invalid_tree, "no root (every node has a parent)");
    tree.root_ = *root;
    for (NodeId id = 0; id < tree.nodes_.size(); ++id) {
        if (tree.nodes_[id].parent) tree.nodes_[*tree.nodes_[id].parent].children.push_back(id);
    }

    // Breadth-first from the root assigns depths; anything unvisited sits on
    // a cycle detached from the root.
    std::vector<bool> reached(tree.nodes_.size(), false);
    std::vector<NodeId> frontier{tree.root_};
    reached[tree.root_] = true;
    std::size_t visited = 0;
    while (!frontier.empty()) {
        std::vector<NodeId> next;
        for (NodeId id : frontier) {
            ++visited;
            for (NodeId c : tree.nodes_[id].children) {
                if (!(!reached[c])) {
                    fail(ErrorKind::invalid_tree, "node " + std::to_string(c) + " reached twice");
                }
                reached[c] = true;
                tree.nodes_[c].depth = tree.nodes_[id].depth + 1;
                next.push_back(c);
            }
        }
        frontier = std::move(next);
    }
    if (!(visited == tree.nodes_.size())) {
        fail(ErrorKind::invalid_tree, std::to_string(tree.nodes_.size() - visited) + " node(s) unreachable from the root (cycle)");
    }

    for (NodeId id = 0; id < tree.nodes_.size(); ++id) {
        const Node& n = tree.nodes_[id];
        if (!n.code) continue;
        if (!(!n.code->empty())) {
            fail(ErrorKind::invalid_tree, "empty language code on node " + n.name);
        }
        if (!(n.children.empty())) {
            fail(ErrorKind::invalid_tree, "language code '" + *n.code + "' on internal node " + n.name);
        }
        if (!(tree.by_code_.emplace(*n.code, id).second)) {
            fail(ErrorKind::invalid_tree, "duplicate language code '" + *n.code + "'");
        }
    }
    return tree;
}

LanguageTree LanguageTree::from_json(const nlohmann::json& doc) {
    std::vector<NodeSpec> specs;
    struct Pending {
        const nlohmann::json* obj;
        std::optional<NodeId> parent;
    };
    std::vector<Pending> stack{{&doc, std::nullopt}};
    while (!stack.empty()) {
        const Pending cur = stack.back();
        stack.pop_back();
        const nlohmann::json& o = *cur.obj;
        require(o.is_object(), ErrorKind::format, "tree node must be a JSON object");
        require(o.contains("name") && o["name"].is_string(), ErrorKind::format, "tree node needs a string 'name'");
        NodeSpec s;
        s.id = specs.size();
        s.name = o["name"].get<std::string>();
        s.parent = cur.parent;
        if (o.contains("code") && !o["code"].is_null()) {
            if (!(o["code"].is_string())) {
                fail(ErrorKind::format, "'code' must be a string on node " + s.name);
            }
            s.code = o["code"].get<std::string>();
        }
        specs.push_back(s);
        if (o.contains("children")) {
            const nlohmann::json& ch = o["children"];
            if (!(ch.is_array())) {
                fail(ErrorKind::format, "'children' must be an array on node " + s.name);
            }
            for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back({&*it, s.id});
        }
    }
    return from_nodes(specs);
}

LanguageTree LanguageTree::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!(in.good())) {
        fail(ErrorKind::io, "cannot open tree file " + path.string());
    }
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::format, "tree file " + path.string() + ": " + e.what());
    }
    return from_json(doc);
}

nlohmann::json LanguageTree::to_json() const {
    // Recursive on purpose: trees are shallow.
    auto emit = [this](auto&& self, NodeId id) -> nlohmann::json {
        const Node& n = nodes_[id];
        nlohmann::json o;
        o["name"] = n.name;
        if (n.code) o["code"] = *n.code;
        if (!n.children.empty()) {
            o["children"] = nlohmann::json::array();
            for (NodeId c : n.children) o["children"].push_back(self(self, c));
        }
        return o;
    };
    return emit(emit, root_);
}

void LanguageTree::check(NodeId n) const {
    if (!(n < nodes_.size())) {
        fail(ErrorKind::invalid_node, "node id " + std::to_string(n) + " (tree has " + std::to_string(nodes_.size()) + " nodes)");
    }
}

const std::string& LanguageTree::name(NodeId n) const {
    check(n);
    return nodes_[n].name;
}

const std::optional<std::string>& LanguageTree::code(NodeId n) const {
    check(n);
    return nodes_[n].code;
}

std::optional<NodeId> LanguageTree::parent(NodeId n) const {
    check(n);
    return nodes_[n].parent;
}

std::span<const NodeId> LanguageTree::children(NodeId n) const {
    check(n);
    return nodes_[n].children;
}

bool LanguageTree::is_leaf(NodeId n) const {
    check(n);
    return nodes_[n].children.empty();
}

NodeId LanguageTree::node_of(std::string_view code) const {
    const auto it = by_code_.find(std::string(code));
    if (!(it != by_code_.end())) {
        fail(ErrorKind::unknown_code, "'" + std::string(code) + "' is not a leaf code");
    }
    return it->second;
}

bool LanguageTree::has_code(std::string_view code) const {
    return by_code_.contains(std::string(code));
}

std::vector<std::string> LanguageTree::leaf_codes() const {
    std::vector<std::string> out;
    std::vector<NodeId> stack{root_};
    while (!stack.empty()) {
        const NodeId id = stack.back();
        stack.pop_back();
        const Node& n = nodes_[id];
        if (n.code) out.push_back(*n.code);
        for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back(*it);
    }
    return out;
}

std::size_t LanguageTree::depth(NodeId n) const {
    check(n);
    return nodes_[n].depth;
}

NodeId LanguageTree::lca(NodeId a, NodeId b) const {
    check(a);
    check(b);
    while (nodes_[a].depth > nodes_[b].depth) a = *nodes_[a].parent;
    while (nodes_[b].depth > nodes_[a].depth) b = *nodes_[b].parent;
    while (a != b) {
        a = *nodes_[a].parent;
        b = *nodes_[b].parent;
    }
    return a;
}

std::vector<NodeSpec> LanguageTree::nodes() const {
    std::vector<NodeSpec> out;
    out.reserve(nodes_.size());
    for (NodeId id = 0; id < nodes_.size(); ++id) {
        out.push_back(NodeSpec{id, nodes_[id].name, nodes_[id].code, nodes_[id].parent});
    }
    return out;
}

std::size_t sim(const LanguageTree& tree, std::string_view language, std::span<const std::string> targets) {
    const NodeId l = tree.node_of(language);
    std::size_t total = 0;
    for (const std::string& t : targets) {
        total += tree.depth(tree.lca(l, tree.node_of(t)));
    }
    return total;
}

std::vector<ScoredLanguage> rank_candidates(const LanguageTree& tree, const SelectionRequest& request) {
    require(!request.targets.empty(), ErrorKind::invalid_argument, "selection needs at least one target");
    for (const std::string& t : request.targets) tree.node_of(t);
    const std::set<std::string> targets(request.targets.begin(), request.targets.end());
    std::set<std::string> pool;
    const std::vector<std::string> all = request.candidates.empty() ? tree.leaf_codes() : std::vector<std::string>{};
    for (const std::string& c : request.candidates.empty() ? all : request.candidates) {
        tree.node_of(c);
        if (!targets.contains(c)) pool.insert(c);
    }
    std::vector<ScoredLanguage> ranked;
    ranked.reserve(pool.size());
    for (const std::string& c : pool) {
        ranked.push_back(ScoredLanguage{c, sim(tree, c, request.targets)});
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const ScoredLanguage& a, const ScoredLanguage& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.code < b.code;
    });
    return ranked;
}

std::vector<std::string> select_sources(const LanguageTree& tree, const SelectionRequest& request) {
    require(request.m >= 1, ErrorKind::invalid_argument, "M must be positive");
    const std::vector<ScoredLanguage> ranked = rank_candidates(tree, request);
    if (!(request.m <= ranked.size())) {
        fail(ErrorKind::insufficient_candidates, "requested M=" + std::to_string(request.m) + " but only " + std::to_string(ranked.size()) + " candidates remain after excluding targets");
    }
    std::vector<std::string> out;
    out.reserve(request.m);
    for (std::size_t i = 0; i < request.m; ++i) out.push_back(ranked[i].code);
    return out;
}

}  // namespace iadapt::langtree
