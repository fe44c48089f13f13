// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Slow reference implementations the tests compare against. Nothing here
// shares code with the library.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    const std::size_t m = a.size(), k = b.size(), n = b.empty() ? 0 : b[0].size();
    Matrix c(m, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) c[i][j] += a[i][p] * b[p][j];
    return c;
}

// Collapse repeats, then drop the blank.
inline std::vector<int> collapse(const std::vector<int>& path, int blank) {
    std::vector<int> out;
    int prev = -1;
    for (int s : path) {
        if (s != prev && s != blank) out.push_back(s);
        prev = s;
    }
    return out;
}

// −log Σ over every length-T path that collapses to `labels`; +inf when none.
// `log_probs` is T rows of V+1 entries with the blank last.
inline double ctc_loss_enumerate(const Matrix& log_probs, const std::vector<int>& labels) {
    const std::size_t T = log_probs.size();
    const int C = static_cast<int>(log_probs[0].size());
    const int blank = C - 1;
    std::vector<int> path(T, 0);
    std::vector<double> terms;
    while (true) {
        if (collapse(path, blank) == labels) {
            double lp = 0.0;
            for (std::size_t t = 0; t < T; ++t) lp += log_probs[t][path[t]];
            terms.push_back(lp);
        }
        std::size_t t = 0;
        while (t < T && ++path[t] == C) path[t++] = 0;
        if (t == T) break;
    }
    if (terms.empty()) return std::numeric_limits<double>::infinity();
    const double mx = *std::max_element(terms.begin(), terms.end());
    double s = 0.0;
    for (double v : terms) s += std::exp(v - mx);
    return -(mx + std::log(s));
}

// Plain recursion over (i, j); exponential, so keep inputs short.
inline std::size_t edit_distance(const std::vector<int>& a, const std::vector<int>& b, std::size_t i = 0,
                                 std::size_t j = 0) {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    const std::size_t sub = edit_distance(a, b, i + 1, j + 1) + (a[i] == b[j] ? 0 : 1);
    const std::size_t del = edit_distance(a, b, i + 1, j) + 1;
    const std::size_t ins = edit_distance(a, b, i, j + 1) + 1;
    return std::min({sub, del, ins});
}

// Tree as a parent array (root has parent -1).
struct ParentTree {
    std::vector<int> parent;
    std::vector<std::string> code;  // empty for internal nodes

    std::vector<int> root_path(int n) const {
        std::vector<int> p;
        for (int x = n; x != -1; x = parent[x]) p.push_back(x);
        std::reverse(p.begin(), p.end());
        return p;
    }
    std::size_t depth(int n) const { return root_path(n).size() - 1; }
    int lca(int a, int b) const {
        const auto pa = root_path(a), pb = root_path(b);
        int last = pa[0];
        for (std::size_t i = 0; i < std::min(pa.size(), pb.size()) && pa[i] == pb[i]; ++i) last = pa[i];
        return last;
    }
    int node_of(const std::string& c) const {
        for (std::size_t i = 0; i < code.size(); ++i)
            if (code[i] == c) return static_cast<int>(i);
        return -1;
    }
    std::size_t sim(const std::string& l, const std::vector<std::string>& targets) const {
        std::size_t s = 0;
        for (const auto& t : targets) s += depth(lca(node_of(l), node_of(t)));
        return s;
    }
    std::vector<std::string> select(const std::vector<std::string>& targets, const std::vector<std::string>& pool,
                                    std::size_t m) const {
        std::vector<std::pair<long, std::string>> scored;
        for (const auto& c : pool) {
            if (std::find(targets.begin(), targets.end(), c) != targets.end()) continue;
            scored.emplace_back(-static_cast<long>(sim(c, targets)), c);
        }
        std::sort(scored.begin(), scored.end());
        std::vector<std::string> out;
        for (std::size_t i = 0; i < m && i < scored.size(); ++i) out.push_back(scored[i].second);
        return out;
    }
};

// Random rooted tree with n nodes; node i > 0 hangs under a uniform earlier
// node. Leaves get codes "L<i>".
inline ParentTree random_tree(std::size_t n, std::mt19937_64& rng) {
    ParentTree t;
    t.parent.assign(n, -1);
    for (std::size_t i = 1; i < n; ++i) t.parent[i] = static_cast<int>(std::uniform_int_distribution<std::size_t>(0, i - 1)(rng));
    std::vector<bool> has_child(n, false);
    for (std::size_t i = 1; i < n; ++i) has_child[t.parent[i]] = true;
    t.code.assign(n, "");
    for (std::size_t i = 0; i < n; ++i)
        if (!has_child[i] && i != 0) t.code[i] = "L" + std::to_string(i);
    return t;
}

// Central finite difference of f at x along coordinate i.
inline double central_difference(const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
                                 std::size_t i, double h = 1e-5) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    return (up - down) / (2 * h);
}

}  // namespace oracle
