// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "iadapt/ctc.hpp"

namespace iadapt::metrics {

using ctc::Label;
using ctc::LabelSequence;

// Levenshtein distance: insertions + deletions + substitutions.
std::size_t edit_distance(std::span<const Label> ref, std::span<const Label> hyp);

struct ErrorCounts {
    std::size_t n_utts = 0;
    std::size_t edits = 0;
    std::size_t ref_len = 0;
};

ErrorCounts count_errors(std::span<const LabelSequence> refs, std::span<const LabelSequence> hyps);

// Corpus-level character error rate: Σ edits / Σ reference length.
double cer(std::span<const LabelSequence> refs, std::span<const LabelSequence> hyps);

struct EvalRow {
    std::string language;
    std::string split;
    ErrorCounts counts;

    double cer() const;
};

struct EvalReport {
    std::vector<EvalRow> rows;

    void add(std::string language, std::string split, ErrorCounts counts);
    ErrorCounts total() const;
    double aggregate_cer() const;

    static constexpr const char* kCsvHeader = "language,split,n_utts,edits,ref_len,cer";
    void write_csv(std::ostream& os, bool header = true) const;
};

// Fixed-precision rendering used in every CSV so reruns are byte-identical.
std::string format_rate(double value);

}  // namespace iadapt::metrics
