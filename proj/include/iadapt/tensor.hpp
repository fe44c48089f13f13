// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors of 64-bit floats and the plain (non-differentiable)
// kernels the tape builds on. Broadcasting is limited to bias-add over the
// last axis; every other shape disagreement raises ErrorKind::shape_mismatch.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace iadapt::num {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor scalar(double value) { return Tensor({1}, {value}); }
    static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
        return Tensor({rows, cols}, fill);
    }
    static Tensor vector(std::vector<double> data) {
        const std::size_t n = data.size();
        return Tensor({n}, std::move(data));
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    // 2-D view conventions: a rank-1 tensor is treated as a single row.
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    const std::vector<double>& values() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
    double at(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }

    std::span<double> row(std::size_t r) noexcept { return std::span<double>(data_).subspan(r * cols(), cols()); }
    std::span<const double> row(std::size_t r) const noexcept {
        return std::span<const double>(data_).subspan(r * cols(), cols());
    }

    void fill(double value) noexcept;
    void add_inplace(const Tensor& other);
    void axpy_inplace(double alpha, const Tensor& other);

    bool all_finite() const noexcept;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

std::size_t element_count(const Shape& shape);

// Bit-level FNV-1a hash of shape and element bytes.
std::uint64_t hash_bytes(const Tensor& t, std::uint64_t seed = 0xcbf29ce484222325ULL);

// --- forward kernels --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);       // (m,k)·(k,n)
Tensor matmul_nt(const Tensor& a, const Tensor& b);    // (m,k)·(n,k)ᵀ
Tensor matmul_tn(const Tensor& a, const Tensor& b);    // (k,m)ᵀ·(k,n)
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor add_bias(const Tensor& x, const Tensor& bias);  // bias over the last axis
Tensor scale(const Tensor& x, double s);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& x);
Tensor gelu(const Tensor& x);
Tensor softmax(const Tensor& x);                        // last axis
Tensor log_softmax(const Tensor& x);                    // last axis
Tensor layer_norm(const Tensor& x, double eps);         // last axis, no affine
Tensor embedding(const Tensor& table, std::span<const std::size_t> ids);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
Tensor concat_cols(std::span<const Tensor> parts);
double sum(const Tensor& x);

double logsumexp(std::span<const double> values);

double gelu_scalar(double x);
double gelu_derivative(double x);

constexpr double kLayerNormEps = 1e-5;

}  // namespace iadapt::num
