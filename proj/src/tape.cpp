// Copyright 2026 The iadapt Authors
// SPDX-License-Identifier: Apache-2.0

#include "iadapt/tape.hpp"

#include <cmath>
#include <string>

#include "iadapt/error.hpp"

namespace iadapt::num {

namespace {

Tensor column_sums(const Tensor& g) {
    Tensor s = Tensor::vector(std::vector<double>(g.cols(), 0.0));
    const std::size_t n = g.cols();
    for (std::size_t r = 0; r < g.rows(); ++r) {
        const double* row = g.data().data() + r * n;
        for (std::size_t j = 0; j < n; ++j) {
            s[j] += row[j];
        }
    }
    return s;
}

}  // namespace

Var Tape::push(Node n) {
    require(nodes_.size() < UINT32_MAX, ErrorKind::invalid_argument, "tape overflow");
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tape::Node& Tape::node(Var v) {
    if (!(v.index < nodes_.size())) {
        fail(ErrorKind::not_on_tape, "variable " + std::to_string(v.index) + " not on tape");
    }
    return nodes_[v.index];
}

const Tape::Node& Tape::node(Var v) const {
    if (!(v.index < nodes_.size())) {
        fail(ErrorKind::not_on_tape, "variable " + std::to_string(v.index) + " not on tape");
    }
    return nodes_[v.index];
}

bool Tape::any_requires(std::span<const Var> inputs) const {
    for (Var v : inputs) {
        if (node(v).requires_grad) return true;
    }
    return false;
}

const Tensor& Tape::value(Var v) const {
    const Node& n = node(v);
    return n.external ? *n.external : n.value;
}

bool Tape::requires_grad(Var v) const {
    return node(v).requires_grad;
}

Tensor* Tape::grad_sink(Var v) {
    Node& n = node(v);
    if (!n.requires_grad) return nullptr;
    if (!n.has_grad) {
        n.grad = Tensor(value(v).shape(), 0.0);
        n.has_grad = true;
    }
    return &n.grad;
}

Var Tape::constant(Tensor value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::input(Tensor value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad && grad_enabled_;
    return push(std::move(n));
}

Var Tape::parameter(ParamId id, const Tensor& value, bool trainable) {
    Node n;
    n.external = &value;
    n.requires_grad = trainable && grad_enabled_;
    n.param = id;
    return push(std::move(n));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, BackwardFn backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = any_requires(inputs);
    if (n.requires_grad) {
        n.backward = std::move(backward);
    }
    return push(std::move(n));
}

Var Tape::matmul(Var a, Var b) {
    const Var in[] = {a, b};
    return record(num::matmul(value(a), value(b)), in, [a, b](Tape& t, const Tensor& g) {
        if (Tensor* ga = t.grad_sink(a)) ga->add_inplace(num::matmul_nt(g, t.value(b)));
        if (Tensor* gb = t.grad_sink(b)) gb->add_inplace(num::matmul_tn(t.value(a), g));
    });
}

Var Tape::matmul_nt(Var a, Var b) {
    const Var in[] = {a, b};
    return record(num::matmul_nt(value(a), value(b)), in, [a, b](Tape& t, const Tensor& g) {
        if (Tensor* ga = t.grad_sink(a)) ga->add_inplace(num::matmul(g, t.value(b)));
        if (Tensor* gb = t.grad_sink(b)) gb->add_inplace(num::matmul_tn(g, t.value(a)));
    });
}

Var Tape::linear(Var x, Var weight, Var bias) {
    const Var in[] = {x, weight, bias};
    return record(num::add_bias(num::matmul(value(x), value(weight)), value(bias)), in,
                  [x, weight, bias](Tape& t, const Tensor& g) {
                      if (Tensor* gx = t.grad_sink(x)) gx->add_inplace(num::matmul_nt(g, t.value(weight)));
                      if (Tensor* gw = t.grad_sink(weight)) gw->add_inplace(num::matmul_tn(t.value(x), g));
                      if (Tensor* gb = t.grad_sink(bias)) gb->add_inplace(column_sums(g));
                  });
}

Var Tape::add(Var a, Var b) {
    const Var in[] = {a, b};
    return record(num::add(value(a), value(b)), in, [a, b](Tape& t, const Tensor& g) {
        if (Tensor* ga = t.grad_sink(a)) ga->add_inplace(g);
        if (Tensor* gb = t.grad_sink(b)) gb->add_inplace(g);
    });
}

Var Tape::add_bias(Var x, Var bias) {
    const Var in[] = {x, bias};
    return record(num::add_bias(value(x), value(bias)), in, [x, bias](Tape& t, const Tensor& g) {
        if (Tensor* gx = t.grad_sink(x)) gx->add_inplace(g);
        if (Tensor* gb = t.grad_sink(bias)) gb->add_inplace(column_sums(g));
    });
}

Var Tape::scale(Var x, double s) {
    const Var in[] = {x};
    return record(num::scale(value(x), s), in, [x, s](Tape& t, const Tensor& g) {
        if (Tensor* gx = t.grad_sink(x)) gx->axpy_inplace(s, g);
    });
}

Var Tape::mul(Var a, Var b) {
    const Var in[] = {a, b};
    return record(num::mul(value(a), value(b)), in, [a, b](Tape& t, const Tensor& g) {
        if (Tensor* ga = t.grad_sink(a)) ga->add_inplace(num::mul(g, t.value(b)));
        if (Tensor* gb = t.grad_sink(b)) gb->add_inplace(num::mul(g, t.value(a)));
    });
}

Var Tape::relu(Var x) {
    const Var in[] = {x};
    return record(num::relu(value(x)), in, [x](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_sink(x);
        const Tensor& xv = t.value(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (xv[i] > 0.0) (*gx)[i] += g[i];
        }
    });
}

Var Tape::gelu(Var x) {
    const Var in[] = {x};
    return record(num::gelu(value(x)), in, [x](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_sink(x);
        const Tensor& xv = t.value(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            (*gx)[i] += g[i] * gelu_derivative(xv[i]);
        }
    });
}

Var Tape::softmax(Var x) {
    const Var in[] = {x};
    const Var out{static_cast<std::uint32_t>(nodes_.size())};
    return record(num::softmax(value(x)), in, [x, out](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_sink(x);
        const Tensor& y = t.value(out);
        const std::size_t n = y.cols();
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < n; ++j) dot += g.at(r, j) * y.at(r, j);
            for (std::size_t j = 0; j < n; ++j) gx->at(r, j) += y.at(r, j) * (g.at(r, j) - dot);
        }
    });
}

Var Tape::log_softmax(Var x) {
    const Var in[] = {x};
    const Var out{static_cast<std::uint32_t>(nodes_.size())};
    return record(num::log_softmax(value(x)), in, [x, out](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_sink(x);
        const Tensor& y = t.value(out);
        const std::size_t n = y.cols();
        for (std::size_t r = 0; r < y.rows(); ++r) {
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) total += g.at(r, j);
            for (std::size_t j = 0; j < n; ++j) gx->at(r, j) += g.at(r, j) - std::exp(y.at(r, j)) * total;
        }
    });
}

namespace {

struct NormStats {
    Tensor normalized;
    std::vector<double> inv_std;
};

NormStats normalize_rows(const Tensor& x) {
    NormStats s{Tensor(x.shape()), std::vector<double>(x.rows())};
    const std::size_t n = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto in = x.row(r);
        double mean = 0.0;
        for (double v : in) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : in) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        s.inv_std[r] = inv;
        auto outr = s.normalized.row(r);
        for (std::size_t j = 0; j < n; ++j) outr[j] = (in[j] - mean) * inv;
    }
    return s;
}

// dx for x̂ = (x - mean) * inv, given gradient w.r.t. x̂.
void normalize_backward(const Tensor& xhat, const std::vector<double>& inv_std, const Tensor& gxhat, Tensor& gx) {
    const std::size_t n = xhat.cols();
    const double nd = static_cast<double>(n);
    for (std::size_t r = 0; r < xhat.rows(); ++r) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            sum_g += gxhat.at(r, j);
            sum_gx += gxhat.at(r, j) * xhat.at(r, j);
        }
        const double k = inv_std[r] / nd;
        for (std::size_t j = 0; j < n; ++j) {
            gx.at(r, j) += k * (nd * gxhat.at(r, j) - sum_g - xhat.at(r, j) * sum_gx);
        }
    }
}

}  // namespace

Var Tape::layer_norm(Var x) {
    const Var in[] = {x};
    NormStats stats = normalize_rows(value(x));
    Tensor out = stats.normalized;
    return record(std::move(out), in, [x, stats = std::move(stats)](Tape& t, const Tensor& g) {
        normalize_backward(stats.normalized, stats.inv_std, g, *t.grad_sink(x));
    });
}

Var Tape::layer_norm(Var x, Var gamma, Var beta) {
    const Tensor& xv = value(x);
    const Tensor& gv = value(gamma);
    const Tensor& bv = value(beta);
    if (!(gv.rank() == 1 && gv.size() == xv.cols() && bv.shape() == gv.shape())) {
        fail(ErrorKind::shape_mismatch, "layer_norm affine params " + shape_string(gv.shape()) + "/" + shape_string(bv.shape()) + " for input " + shape_string(xv.shape()));
    }
    const Var in[] = {x, gamma, beta};
    NormStats stats = normalize_rows(xv);
    Tensor out = stats.normalized;
    const std::size_t n = xv.cols();
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t j = 0; j < n; ++j) out.at(r, j) = out.at(r, j) * gv[j] + bv[j];
    }
    return record(std::move(out), in, [x, gamma, beta, stats = std::move(stats)](Tape& t, const Tensor& g) {
        const Tensor& xhat = stats.normalized;
        const std::size_t cols = xhat.cols();
        if (Tensor* gg = t.grad_sink(gamma)) {
            for (std::size_t r = 0; r < xhat.rows(); ++r)
                for (std::size_t j = 0; j < cols; ++j) (*gg)[j] += g.at(r, j) * xhat.at(r, j);
        }
        if (Tensor* gb = t.grad_sink(beta)) gb->add_inplace(column_sums(g));
        if (Tensor* gx = t.grad_sink(x)) {
            const Tensor& gam = t.value(gamma);
            Tensor gxhat = g;
            for (std::size_t r = 0; r < xhat.rows(); ++r)
                for (std::size_t j = 0; j < cols; ++j) gxhat.at(r, j) *= gam[j];
            normalize_backward(xhat, stats.inv_std, gxhat, *gx);
        }
    });
}

Var Tape::embedding(Var table, std::vector<std::size_t> ids) {
    const Var in[] = {table};
    Tensor out = num::embedding(value(table), ids);
    return record(std::move(out), in, [table, ids = std::move(ids)](Tape& t, const Tensor& g) {
        Tensor* gt = t.grad_sink(table);
        const std::size_t d = g.cols();
        for (std::size_t i = 0; i < ids.size(); ++i) {
            for (std::size_t j = 0; j < d; ++j) gt->at(ids[i], j) += g.at(i, j);
        }
    });
}

Var Tape::slice_rows(Var x, std::size_t begin, std::size_t end) {
    const Var in[] = {x};
    return record(num::slice_rows(value(x), begin, end), in, [x, begin](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_sink(x);
        const std::size_t n = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t j = 0; j < n; ++j) gx->at(begin + r, j) += g.at(r, j);
    });
}

Var Tape::slice_cols(Var x, std::size_t begin, std::size_t end) {
    const Var in[] = {x};
    return record(num::slice_cols(value(x), begin, end), in, [x, begin](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_sink(x);
        const std::size_t w = g.cols();
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t j = 0; j < w; ++j) gx->at(r, begin + j) += g.at(r, j);
    });
}

Var Tape::concat_cols(std::span<const Var> parts) {
    std::vector<Tensor> values;
    values.reserve(parts.size());
    for (Var p : parts) values.push_back(value(p));
    std::vector<Var> inputs(parts.begin(), parts.end());
    return record(num::concat_cols(values), parts, [inputs = std::move(inputs)](Tape& t, const Tensor& g) {
        std::size_t offset = 0;
        for (Var p : inputs) {
            const std::size_t w = t.value(p).cols();
            if (Tensor* gp = t.grad_sink(p)) {
                for (std::size_t r = 0; r < g.rows(); ++r)
                    for (std::size_t j = 0; j < w; ++j) gp->at(r, j) += g.at(r, offset + j);
            }
            offset += w;
        }
    });
}

Var Tape::sum(Var x) {
    const Var in[] = {x};
    return record(Tensor::scalar(num::sum(value(x))), in, [x](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_sink(x);
        for (double& v : gx->data()) v += g[0];
    });
}

Var Tape::mean(Var x) {
    const Var in[] = {x};
    const double n = static_cast<double>(value(x).size());
    return record(Tensor::scalar(num::sum(value(x)) / n), in, [x, n](Tape& t, const Tensor& g) {
        Tensor* gx = t.grad_sink(x);
        for (double& v : gx->data()) v += g[0] / n;
    });
}

GradientMap Tape::backward(Var loss) {
    require(loss.index < nodes_.size(), ErrorKind::not_on_tape, "loss is not recorded on this tape");
    Node& root = nodes_[loss.index];
    const Tensor& lv = root.external ? *root.external : root.value;
    if (!(lv.size() == 1)) {
        fail(ErrorKind::not_scalar, "loss must be a scalar, got " + shape_string(lv.shape()));
    }

    GradientMap grads;
    if (!root.requires_grad) {
        return grads;
    }
    root.grad = Tensor(lv.shape(), 1.0);
    root.has_grad = true;

    for (std::size_t i = loss.index + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.has_grad || !n.backward) continue;
        ++backward_visits_;
        n.backward(*this, n.grad);
    }

    for (Node& n : nodes_) {
        if (!n.param || !n.has_grad) continue;
        auto [it, inserted] = grads.try_emplace(*n.param, n.grad);
        if (!inserted) it->second.add_inplace(n.grad);
    }
    return grads;
}

void Tape::clear() {
    nodes_.clear();
    backward_visits_ = 0;
}

}  // namespace iadapt::num
