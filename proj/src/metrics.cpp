// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "iadapt/error.hpp"

namespace iadapt::metrics {

std::size_t edit_distance(std::span<const Label> ref, std::span<const Label> hyp) {
    std::vector<std::size_t> prev(hyp.size() + 1), cur(hyp.size() + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= ref.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= hyp.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
            cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
        }
        std::swap(prev, cur);
    }
    return prev[hyp.size()];
}

ErrorCounts count_errors(std::span<const LabelSequence> refs, std::span<const LabelSequence> hyps) {
    if (!(refs.size() == hyps.size())) {
        fail(ErrorKind::invalid_argument, "got " + std::to_string(refs.size()) + " references but " + std::to_string(hyps.size()) + " hypotheses");
    }
    ErrorCounts c;
    c.n_utts = refs.size();
    for (std::size_t i = 0; i < refs.size(); ++i) {
        c.edits += edit_distance(refs[i], hyps[i]);
        c.ref_len += refs[i].size();
    }
    return c;
}

double cer(std::span<const LabelSequence> refs, std::span<const LabelSequence> hyps) {
    const ErrorCounts c = count_errors(refs, hyps);
    require(c.ref_len > 0, ErrorKind::invalid_argument, "CER undefined: all references are empty");
    return static_cast<double>(c.edits) / static_cast<double>(c.ref_len);
}

double EvalRow::cer() const {
    if (!(counts.ref_len > 0)) {
        fail(ErrorKind::invalid_argument, "CER undefined for " + language + ": empty references");
    }
    return static_cast<double>(counts.edits) / static_cast<double>(counts.ref_len);
}

void EvalReport::add(std::string language, std::string split, ErrorCounts counts) {
    rows.push_back(EvalRow{std::move(language), std::move(split), counts});
}

ErrorCounts EvalReport::total() const {
    ErrorCounts t;
    for (const EvalRow& r : rows) {
        t.n_utts += r.counts.n_utts;
        t.edits += r.counts.edits;
        t.ref_len += r.counts.ref_len;
    }
    return t;
}

double EvalReport::aggregate_cer() const {
    const ErrorCounts t = total();
    require(t.ref_len > 0, ErrorKind::invalid_argument, "aggregate CER undefined: no reference symbols");
    return static_cast<double>(t.edits) / static_cast<double>(t.ref_len);
}

std::string format_rate(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", value);
    return buf;
}

void EvalReport::write_csv(std::ostream& os, bool header) const {
    if (header) os << kCsvHeader << '\n';
    for (const EvalRow& r : rows) {
        os << r.language << ',' << r.split << ',' << r.counts.n_utts << ',' << r.counts.edits << ','
           << r.counts.ref_len << ',' << format_rate(r.cer()) << '\n';
    }
}

}  // namespace iadapt::metrics
