// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seed derivation. Every random stream in the toolkit is keyed by a base seed
// plus a string tag (and optional index), so independent streams never alias.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace iadapt {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) noexcept {
    return splitmix64(splitmix64(base ^ fnv1a(tag)) + index);
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t base, std::string_view tag, std::uint64_t index = 0) {
    return Rng(derive_seed(base, tag, index));
}

}  // namespace iadapt
