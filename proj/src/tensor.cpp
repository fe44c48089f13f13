// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Core>

#include "iadapt/error.hpp"

namespace iadapt::num {

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) {
        n *= d;
    }
    return n;
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    for (std::size_t d : shape_) {
        if (!(d > 0)) {
            fail(ErrorKind::shape_mismatch, "tensor dimensions must be positive, got " + shape_string(shape_));
        }
    }
    require(!shape_.empty(), ErrorKind::shape_mismatch, "tensor must have rank >= 1");
    data_.assign(element_count(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    require(!shape_.empty(), ErrorKind::shape_mismatch, "tensor must have rank >= 1");
    for (std::size_t d : shape_) {
        if (!(d > 0)) {
            fail(ErrorKind::shape_mismatch, "tensor dimensions must be positive, got " + shape_string(shape_));
        }
    }
    if (!(element_count(shape_) == data_.size())) {
        fail(ErrorKind::shape_mismatch, "element count " + std::to_string(data_.size()) + " does not match shape " + shape_string(shape_));
    }
}

std::size_t Tensor::rows() const noexcept {
    if (shape_.empty()) return 0;
    if (shape_.size() == 1) return 1;
    return data_.size() / shape_.back();
}

std::size_t Tensor::cols() const noexcept {
    return shape_.empty() ? 0 : shape_.back();
}

void Tensor::fill(double value) noexcept {
    std::fill(data_.begin(), data_.end(), value);
}

void Tensor::add_inplace(const Tensor& other) {
    if (!(shape_ == other.shape_)) {
        fail(ErrorKind::shape_mismatch, "add_inplace " + shape_string(shape_) + " vs " + shape_string(other.shape_));
    }
    double* dst = data_.data();
    const double* src = other.data_.data();
    const std::size_t n = data_.size();
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] += src[i];
    }
}

void Tensor::axpy_inplace(double alpha, const Tensor& other) {
    if (!(shape_ == other.shape_)) {
        fail(ErrorKind::shape_mismatch, "axpy " + shape_string(shape_) + " vs " + shape_string(other.shape_));
    }
    double* dst = data_.data();
    const double* src = other.data_.data();
    const std::size_t n = data_.size();
    for (std::size_t i = 0; i < n; ++i) {
        dst[i] += alpha * src[i];
    }
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::uint64_t hash_bytes(const Tensor& t, std::uint64_t h) {
    auto mix = [&h](const void* p, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (std::size_t d : t.shape()) {
        const std::uint64_t d64 = d;
        mix(&d64, sizeof d64);
    }
    mix(t.data().data(), t.size() * sizeof(double));
    return h;
}

namespace {

void require_matrix(const Tensor& t, const char* what) {
    if (!(t.rank() == 2)) {
        fail(ErrorKind::shape_mismatch, std::string(what) + " expects a matrix, got " + shape_string(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!(a.shape() == b.shape())) {
        fail(ErrorKind::shape_mismatch, std::string(what) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
    }
}

}  // namespace

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor& t) {
    return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.shape()[0]), static_cast<Eigen::Index>(t.shape()[1]));
}

MutMap view(Tensor& t) {
    return MutMap(t.data().data(), static_cast<Eigen::Index>(t.shape()[0]), static_cast<Eigen::Index>(t.shape()[1]));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul");
    require_matrix(b, "matmul");
    const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    if (!(b.shape()[0] == k)) {
        fail(ErrorKind::shape_mismatch, "matmul " + shape_string(a.shape()) + " x " + shape_string(b.shape()));
    }
    Tensor c = Tensor::matrix(m, n);
    view(c).noalias() = view(a) * view(b);
    return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_nt");
    require_matrix(b, "matmul_nt");
    if (!(a.shape()[1] == b.shape()[1])) {
        fail(ErrorKind::shape_mismatch, "matmul_nt " + shape_string(a.shape()) + " x " + shape_string(b.shape()) + "^T");
    }
    Tensor c = Tensor::matrix(a.shape()[0], b.shape()[0]);
    view(c).noalias() = view(a) * view(b).transpose();
    return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
    require_matrix(a, "matmul_tn");
    require_matrix(b, "matmul_tn");
    if (!(b.shape()[0] == a.shape()[0])) {
        fail(ErrorKind::shape_mismatch, "matmul_tn " + shape_string(a.shape()) + "^T x " + shape_string(b.shape()));
    }
    Tensor c = Tensor::matrix(a.shape()[1], b.shape()[1]);
    view(c).noalias() = view(a).transpose() * view(b);
    return c;
}

Tensor transpose(const Tensor& a) {
    require_matrix(a, "transpose");
    const std::size_t m = a.shape()[0], n = a.shape()[1];
    Tensor t = Tensor::matrix(n, m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            t.at(j, i) = a.at(i, j);
        }
    }
    return t;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor c = a;
    c.add_inplace(b);
    return c;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    if (!(bias.rank() == 1 && bias.size() == x.cols())) {
        fail(ErrorKind::shape_mismatch, "add_bias " + shape_string(x.shape()) + " + " + shape_string(bias.shape()));
    }
    Tensor y = x;
    const std::size_t n = x.cols();
    const std::size_t rows = x.rows();
    double* py = y.data().data();
    const double* pb = bias.data().data();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < n; ++j) {
            py[r * n + j] += pb[j];
        }
    }
    return y;
}

Tensor scale(const Tensor& x, double s) {
    Tensor y = x;
    for (double& v : y.data()) {
        v *= s;
    }
    return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor c = a;
    for (std::size_t i = 0; i < c.size(); ++i) {
        c[i] *= b[i];
    }
    return c;
}

Tensor relu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data()) {
        v = v > 0.0 ? v : 0.0;
    }
    return y;
}

double gelu_scalar(double x) {
    return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 * 0.5));
}

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 * 0.5));
    const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi * std::numbers::sqrt2 * 0.5);
    return cdf + x * pdf;
}

Tensor gelu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.data()) {
        v = gelu_scalar(v);
    }
    return y;
}

double logsumexp(std::span<const double> values) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values) {
        m = std::max(m, v);
    }
    if (!std::isfinite(m)) {
        return m;
    }
    double s = 0.0;
    for (double v : values) {
        s += std::exp(v - m);
    }
    return m + std::log(s);
}

Tensor softmax(const Tensor& x) {
    Tensor y = x;
    const std::size_t n = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = y.row(r);
        const double m = *std::max_element(row.begin(), row.end());
        double s = 0.0;
        for (double& v : row) {
            v = std::exp(v - m);
            s += v;
        }
        const double inv = 1.0 / s;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] *= inv;
        }
    }
    return y;
}

Tensor log_softmax(const Tensor& x) {
    Tensor y = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = y.row(r);
        const double lse = logsumexp(row);
        for (double& v : row) {
            v -= lse;
        }
    }
    return y;
}

Tensor layer_norm(const Tensor& x, double eps) {
    Tensor y = x;
    const std::size_t n = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = y.row(r);
        double mean = 0.0;
        for (double v : row) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : row) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + eps);
        for (double& v : row) {
            v = (v - mean) * inv;
        }
    }
    return y;
}

Tensor embedding(const Tensor& table, std::span<const std::size_t> ids) {
    require_matrix(table, "embedding");
    require(!ids.empty(), ErrorKind::shape_mismatch, "embedding lookup needs at least one id");
    const std::size_t d = table.cols();
    Tensor out = Tensor::matrix(ids.size(), d);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (!(ids[i] < table.rows())) {
            fail(ErrorKind::shape_mismatch, "embedding id " + std::to_string(ids[i]) + " out of range " + std::to_string(table.rows()));
        }
        std::memcpy(out.row(i).data(), table.row(ids[i]).data(), d * sizeof(double));
    }
    return out;
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
    require_matrix(x, "slice_rows");
    if (!(begin < end && end <= x.rows())) {
        fail(ErrorKind::shape_mismatch, "slice_rows [" + std::to_string(begin) + "," + std::to_string(end) + ") of " + shape_string(x.shape()));
    }
    const std::size_t n = x.cols();
    std::vector<double> data(x.data().begin() + static_cast<std::ptrdiff_t>(begin * n),
                             x.data().begin() + static_cast<std::ptrdiff_t>(end * n));
    return Tensor({end - begin, n}, std::move(data));
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
    require_matrix(x, "slice_cols");
    if (!(begin < end && end <= x.cols())) {
        fail(ErrorKind::shape_mismatch, "slice_cols [" + std::to_string(begin) + "," + std::to_string(end) + ") of " + shape_string(x.shape()));
    }
    const std::size_t w = end - begin;
    Tensor out = Tensor::matrix(x.rows(), w);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::memcpy(out.row(r).data(), x.row(r).data() + begin, w * sizeof(double));
    }
    return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
    require(!parts.empty(), ErrorKind::shape_mismatch, "concat_cols of zero tensors");
    const std::size_t rows = parts.front().rows();
    std::size_t total = 0;
    for (const Tensor& p : parts) {
        require_matrix(p, "concat_cols");
        require(p.rows() == rows, ErrorKind::shape_mismatch, "concat_cols row mismatch");
        total += p.cols();
    }
    Tensor out = Tensor::matrix(rows, total);
    std::size_t offset = 0;
    for (const Tensor& p : parts) {
        for (std::size_t r = 0; r < rows; ++r) {
            std::memcpy(out.row(r).data() + offset, p.row(r).data(), p.cols() * sizeof(double));
        }
        offset += p.cols();
    }
    return out;
}

double sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    return s;
}

}  // namespace iadapt::num
