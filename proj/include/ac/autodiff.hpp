#pragma once
// Reverse-mode automatic differentiation over ArrayT tensors.
//
// A VarT is a handle to a graph node holding the forward value and, after
// backward(), the accumulated gradient. Ops build nodes dynamically; the
// graph is a DAG (shared subexpressions accumulate gradients). Graphs are
// single-threaded; independent graphs may run on separate threads. With
// gradients globally disabled (NoGradGuard) ops produce detached nodes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ac/array.hpp"
#include "ac/kernels.hpp"
#include "ac/rng.hpp"

namespace ac {

inline thread_local bool t_grad_enabled = true;
inline bool grad_enabled() { return t_grad_enabled; }

struct NoGradGuard {
    bool prev;
    NoGradGuard() : prev(t_grad_enabled) { t_grad_enabled = false; }
    ~NoGradGuard() { t_grad_enabled = prev; }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;
};

template <typename T>
struct NodeT {
    ArrayT<T> value;
    ArrayT<T> grad;  // empty until backward touches this node
    bool requires_grad = false;
    std::vector<std::shared_ptr<NodeT<T>>> parents;
    std::function<void(NodeT<T>&)> backward_fn;

    ArrayT<T>& ensure_grad() {
        if (grad.numel() == 0) grad = ArrayT<T>(value.shape, T(0));
        return grad;
    }
};

template <typename T>
class VarT {
public:
    VarT() = default;
    explicit VarT(ArrayT<T> value, bool requires_grad = false)
        : n_(std::make_shared<NodeT<T>>()) {
        n_->value = std::move(value);
        n_->requires_grad = requires_grad;
    }

    bool defined() const { return static_cast<bool>(n_); }
    const ArrayT<T>& val() const { return n_->value; }
    ArrayT<T>& val() { return n_->value; }
    const ArrayT<T>& grad() const { return n_->grad; }
    bool requires_grad() const { return n_->requires_grad; }
    void zero_grad() {
        if (n_->grad.numel()) n_->grad.fill(T(0));
    }
    const Shape& shape() const { return n_->value.shape; }
    std::shared_ptr<NodeT<T>> node() const { return n_; }

private:
    std::shared_ptr<NodeT<T>> n_;

    template <typename U>
    friend VarT<U> wrap_node(std::shared_ptr<NodeT<U>> n);
};

template <typename T>
VarT<T> wrap_node(std::shared_ptr<NodeT<T>> n) {
    VarT<T> v;
    v.n_ = std::move(n);
    return v;
}

using Var = VarT<float>;

namespace detail_ad {

template <typename T, typename F>
VarT<T> make_op(ArrayT<T> value, std::vector<VarT<T>> parents, F&& backward) {
    auto n = std::make_shared<NodeT<T>>();
    n->value = std::move(value);
    if (grad_enabled()) {
        bool rg = false;
        for (const auto& p : parents) rg = rg || p.node()->requires_grad;
        if (rg) {
            n->requires_grad = true;
            n->parents.reserve(parents.size());
            for (const auto& p : parents) n->parents.push_back(p.node());
            n->backward_fn = std::forward<F>(backward);
        }
    }
    return wrap_node(std::move(n));
}

}  // namespace detail_ad

// Runs reverse-mode accumulation from a scalar loss.
template <typename T>
void backward(const VarT<T>& loss) {
    if (loss.val().numel() != 1)
        throw std::invalid_argument("backward: loss must be scalar, got shape " +
                                    loss.shape().str());
    auto root = loss.node();
    if (!root->requires_grad) return;

    // Iterative post-order DFS for a topological order.
    std::vector<NodeT<T>*> topo;
    std::unordered_set<NodeT<T>*> seen;
    std::vector<std::pair<NodeT<T>*, std::size_t>> stack;
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            NodeT<T>* p = node->parents[idx++].get();
            if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
        } else {
            topo.push_back(node);
            stack.pop_back();
        }
    }

    root->ensure_grad()[0] = T(1);
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        NodeT<T>* n = *it;
        if (n->backward_fn && n->grad.numel()) n->backward_fn(*n);
    }
}

// ---------------------------------------------------------------------------
// Elementwise and shape ops
// ---------------------------------------------------------------------------

template <typename T>
VarT<T> add(const VarT<T>& a, const VarT<T>& b) {
    check_same_shape(a.shape(), b.shape(), "add");
    ArrayT<T> out(a.shape());
    kern::vadd(out.data(), a.val().data(), b.val().data(), out.numel());
    auto an = a.node();
    auto bn = b.node();
    return detail_ad::make_op<T>(std::move(out), {a, b}, [an, bn](NodeT<T>& n) {
        if (an->requires_grad) kern::acc(an->ensure_grad().data(), n.grad.data(), n.grad.numel());
        if (bn->requires_grad) kern::acc(bn->ensure_grad().data(), n.grad.data(), n.grad.numel());
    });
}

template <typename T>
VarT<T> sub(const VarT<T>& a, const VarT<T>& b) {
    check_same_shape(a.shape(), b.shape(), "sub");
    ArrayT<T> out(a.shape());
    kern::vsub(out.data(), a.val().data(), b.val().data(), out.numel());
    auto an = a.node();
    auto bn = b.node();
    return detail_ad::make_op<T>(std::move(out), {a, b}, [an, bn](NodeT<T>& n) {
        if (an->requires_grad) kern::acc(an->ensure_grad().data(), n.grad.data(), n.grad.numel());
        if (bn->requires_grad) kern::axpy(bn->ensure_grad().data(), T(-1), n.grad.data(), n.grad.numel());
    });
}

template <typename T>
VarT<T> mul(const VarT<T>& a, const VarT<T>& b) {
    check_same_shape(a.shape(), b.shape(), "mul");
    ArrayT<T> out(a.shape());
    kern::vmul(out.data(), a.val().data(), b.val().data(), out.numel());
    auto an = a.node();
    auto bn = b.node();
    return detail_ad::make_op<T>(std::move(out), {a, b}, [an, bn](NodeT<T>& n) {
        const std::int64_t m = n.grad.numel();
        if (an->requires_grad) {
            auto& g = an->ensure_grad();
            const T* bv = bn->value.data();
            for (std::int64_t i = 0; i < m; ++i) g[i] += n.grad[i] * bv[i];
        }
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            const T* av = an->value.data();
            for (std::int64_t i = 0; i < m; ++i) g[i] += n.grad[i] * av[i];
        }
    });
}

template <typename T>
VarT<T> scale(const VarT<T>& a, T c) {
    ArrayT<T> out = a.val();
    kern::scale(out.data(), c, out.numel());
    auto an = a.node();
    return detail_ad::make_op<T>(std::move(out), {a}, [an, c](NodeT<T>& n) {
        kern::axpy(an->ensure_grad().data(), c, n.grad.data(), n.grad.numel());
    });
}

// x (N,D) + row vector b (D), broadcast over rows.
template <typename T>
VarT<T> add_bias(const VarT<T>& x, const VarT<T>& b) {
    if (x.shape().nd != 2 || b.shape().nd != 1 || x.shape()[1] != b.shape()[0])
        throw std::invalid_argument("add_bias: shape mismatch " + x.shape().str() + " vs " +
                                    b.shape().str());
    const std::int64_t rows = x.shape()[0], d = x.shape()[1];
    ArrayT<T> out(x.shape());
    for (std::int64_t i = 0; i < rows; ++i)
        kern::vadd(out.data() + i * d, x.val().data() + i * d, b.val().data(), d);
    auto xn = x.node();
    auto bn = b.node();
    return detail_ad::make_op<T>(std::move(out), {x, b}, [xn, bn, rows, d](NodeT<T>& n) {
        if (xn->requires_grad) kern::acc(xn->ensure_grad().data(), n.grad.data(), n.grad.numel());
        if (bn->requires_grad) {
            auto& g = bn->ensure_grad();
            for (std::int64_t i = 0; i < rows; ++i) kern::acc(g.data(), n.grad.data() + i * d, d);
        }
    });
}

template <typename T>
VarT<T> relu(const VarT<T>& x) {
    ArrayT<T> out(x.shape());
    const std::int64_t m = out.numel();
    for (std::int64_t i = 0; i < m; ++i) out[i] = x.val()[i] > T(0) ? x.val()[i] : T(0);
    auto xn = x.node();
    return detail_ad::make_op<T>(std::move(out), {x}, [xn, m](NodeT<T>& n) {
        auto& g = xn->ensure_grad();
        const T* xv = xn->value.data();
        for (std::int64_t i = 0; i < m; ++i)
            if (xv[i] > T(0)) g[i] += n.grad[i];
    });
}

// Exact gelu: 0.5 x (1 + erf(x / sqrt(2))).
template <typename T>
VarT<T> gelu(const VarT<T>& x) {
    static const T inv_sqrt2 = T(0.70710678118654752440);
    static const T inv_sqrt2pi = T(0.39894228040143267794);
    ArrayT<T> out(x.shape());
    const std::int64_t m = out.numel();
    for (std::int64_t i = 0; i < m; ++i) {
        const T v = x.val()[i];
        out[i] = T(0.5) * v * (T(1) + std::erf(v * inv_sqrt2));
    }
    auto xn = x.node();
    return detail_ad::make_op<T>(std::move(out), {x}, [xn, m](NodeT<T>& n) {
        auto& g = xn->ensure_grad();
        const T* xv = xn->value.data();
        for (std::int64_t i = 0; i < m; ++i) {
            const T v = xv[i];
            const T cdf = T(0.5) * (T(1) + std::erf(v * inv_sqrt2));
            const T pdf = inv_sqrt2pi * std::exp(T(-0.5) * v * v);
            g[i] += n.grad[i] * (cdf + v * pdf);
        }
    });
}

template <typename T>
VarT<T> reshape(const VarT<T>& x, Shape s) {
    if (s.numel() != x.val().numel())
        throw std::invalid_argument("reshape: cannot view " + x.shape().str() + " as " + s.str());
    ArrayT<T> out(s, x.val().v);
    auto xn = x.node();
    return detail_ad::make_op<T>(std::move(out), {x}, [xn](NodeT<T>& n) {
        kern::acc(xn->ensure_grad().data(), n.grad.data(), n.grad.numel());
    });
}

template <typename T>
VarT<T> transpose2d(const VarT<T>& x) {
    if (x.shape().nd != 2) throw std::invalid_argument("transpose2d: need 2D, got " + x.shape().str());
    const std::int64_t r = x.shape()[0], c = x.shape()[1];
    ArrayT<T> out(Shape{c, r});
    for (std::int64_t i = 0; i < r; ++i)
        for (std::int64_t j = 0; j < c; ++j) out.at(j, i) = x.val().at(i, j);
    auto xn = x.node();
    return detail_ad::make_op<T>(std::move(out), {x}, [xn, r, c](NodeT<T>& n) {
        auto& g = xn->ensure_grad();
        for (std::int64_t i = 0; i < r; ++i)
            for (std::int64_t j = 0; j < c; ++j) g.at(i, j) += n.grad.at(j, i);
    });
}

// 2D slice [r0, r0+nr) x [c0, c0+nc).
template <typename T>
VarT<T> slice2d(const VarT<T>& x, std::int64_t r0, std::int64_t nr, std::int64_t c0,
                std::int64_t nc) {
    if (x.shape().nd != 2) throw std::invalid_argument("slice2d: need 2D, got " + x.shape().str());
    const std::int64_t r = x.shape()[0], c = x.shape()[1];
    if (r0 < 0 || c0 < 0 || r0 + nr > r || c0 + nc > c)
        throw std::invalid_argument("slice2d: window out of range for " + x.shape().str());
    ArrayT<T> out(Shape{nr, nc});
    for (std::int64_t i = 0; i < nr; ++i)
        for (std::int64_t j = 0; j < nc; ++j) out.at(i, j) = x.val().at(r0 + i, c0 + j);
    auto xn = x.node();
    return detail_ad::make_op<T>(std::move(out), {x}, [xn, r0, c0, nr, nc](NodeT<T>& n) {
        auto& g = xn->ensure_grad();
        for (std::int64_t i = 0; i < nr; ++i)
            for (std::int64_t j = 0; j < nc; ++j) g.at(r0 + i, c0 + j) += n.grad.at(i, j);
    });
}

// Concatenation of two 2D arrays along axis 0 (rows) or 1 (columns).
template <typename T>
VarT<T> concat(const VarT<T>& a, const VarT<T>& b, int axis) {
    if (a.shape().nd != 2 || b.shape().nd != 2)
        throw std::invalid_argument("concat: need 2D operands");
    const std::int64_t ar = a.shape()[0], ac = a.shape()[1];
    const std::int64_t br = b.shape()[0], bc = b.shape()[1];
    ArrayT<T> out;
    if (axis == 0) {
        if (ac != bc)
            throw std::invalid_argument("concat axis 0: column mismatch " + a.shape().str() +
                                        " vs " + b.shape().str());
        out = ArrayT<T>(Shape{ar + br, ac});
        std::copy(a.val().v.begin(), a.val().v.end(), out.v.begin());
        std::copy(b.val().v.begin(), b.val().v.end(), out.v.begin() + a.val().v.size());
    } else if (axis == 1) {
        if (ar != br)
            throw std::invalid_argument("concat axis 1: row mismatch " + a.shape().str() + " vs " +
                                        b.shape().str());
        out = ArrayT<T>(Shape{ar, ac + bc});
        for (std::int64_t i = 0; i < ar; ++i) {
            std::copy_n(a.val().data() + i * ac, ac, out.data() + i * (ac + bc));
            std::copy_n(b.val().data() + i * bc, bc, out.data() + i * (ac + bc) + ac);
        }
    } else {
        throw std::invalid_argument("concat: axis must be 0 or 1");
    }
    auto an = a.node();
    auto bn = b.node();
    return detail_ad::make_op<T>(std::move(out), {a, b}, [an, bn, ar, ac, bc, axis](NodeT<T>& n) {
        if (axis == 0) {
            if (an->requires_grad)
                kern::acc(an->ensure_grad().data(), n.grad.data(), ar * ac);
            if (bn->requires_grad)
                kern::acc(bn->ensure_grad().data(), n.grad.data() + ar * ac,
                          n.grad.numel() - ar * ac);
        } else {
            if (an->requires_grad) {
                auto& g = an->ensure_grad();
                for (std::int64_t i = 0; i < ar; ++i)
                    kern::acc(g.data() + i * ac, n.grad.data() + i * (ac + bc), ac);
            }
            if (bn->requires_grad) {
                auto& g = bn->ensure_grad();
                for (std::int64_t i = 0; i < ar; ++i)
                    kern::acc(g.data() + i * bc, n.grad.data() + i * (ac + bc) + ac, bc);
            }
        }
    });
}

// Per-batch-lane row concatenation: a holds B blocks of Ra rows, b holds B
// blocks of Rb rows; output interleaves [a_block ; b_block] per lane. Used to
// prepend segment memory to the current hidden states.
template <typename T>
VarT<T> concat_streams(const VarT<T>& a, const VarT<T>& b, std::int64_t batch) {
    if (a.shape().nd != 2 || b.shape().nd != 2 || a.shape()[1] != b.shape()[1])
        throw std::invalid_argument("concat_streams: incompatible shapes " + a.shape().str() +
                                    " vs " + b.shape().str());
    if (a.shape()[0] % batch || b.shape()[0] % batch)
        throw std::invalid_argument("concat_streams: rows not divisible by batch");
    const std::int64_t ra = a.shape()[0] / batch, rb = b.shape()[0] / batch;
    const std::int64_t d = a.shape()[1];
    ArrayT<T> out(Shape{batch * (ra + rb), d});
    for (std::int64_t bi = 0; bi < batch; ++bi) {
        std::copy_n(a.val().data() + bi * ra * d, ra * d, out.data() + bi * (ra + rb) * d);
        std::copy_n(b.val().data() + bi * rb * d, rb * d,
                    out.data() + (bi * (ra + rb) + ra) * d);
    }
    auto an = a.node();
    auto bn = b.node();
    return detail_ad::make_op<T>(std::move(out), {a, b}, [an, bn, batch, ra, rb, d](NodeT<T>& n) {
        for (std::int64_t bi = 0; bi < batch; ++bi) {
            if (an->requires_grad)
                kern::acc(an->ensure_grad().data() + bi * ra * d,
                          n.grad.data() + bi * (ra + rb) * d, ra * d);
            if (bn->requires_grad)
                kern::acc(bn->ensure_grad().data() + bi * rb * d,
                          n.grad.data() + (bi * (ra + rb) + ra) * d, rb * d);
        }
    });
}

// ---------------------------------------------------------------------------
// Matrix products
// ---------------------------------------------------------------------------

template <typename T>
VarT<T> matmul(const VarT<T>& a, const VarT<T>& b) {
    if (a.shape().nd != 2 || b.shape().nd != 2 || a.shape()[1] != b.shape()[0])
        throw std::invalid_argument("matmul: incompatible shapes " + a.shape().str() + " vs " +
                                    b.shape().str());
    const std::int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
    ArrayT<T> out(Shape{m, n});
    kern::matmul_nn(out.data(), a.val().data(), b.val().data(), m, k, n, false);
    auto an = a.node();
    auto bn = b.node();
    return detail_ad::make_op<T>(std::move(out), {a, b}, [an, bn, m, k, n](NodeT<T>& nd) {
        if (an->requires_grad)
            kern::matmul_nt(an->ensure_grad().data(), nd.grad.data(), bn->value.data(), m, n, k,
                            true);
        if (bn->requires_grad)
            kern::matmul_tn(bn->ensure_grad().data(), an->value.data(), nd.grad.data(), k, m, n,
                            true);
    });
}

// a (M,K) times b (N,K) transposed: out (M,N) = a b^T.
template <typename T>
VarT<T> matmul_nt(const VarT<T>& a, const VarT<T>& b) {
    if (a.shape().nd != 2 || b.shape().nd != 2 || a.shape()[1] != b.shape()[1])
        throw std::invalid_argument("matmul_nt: incompatible shapes " + a.shape().str() + " vs " +
                                    b.shape().str());
    const std::int64_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
    ArrayT<T> out(Shape{m, n});
    kern::matmul_nt(out.data(), a.val().data(), b.val().data(), m, k, n, false);
    auto an = a.node();
    auto bn = b.node();
    return detail_ad::make_op<T>(std::move(out), {a, b}, [an, bn, m, k, n](NodeT<T>& nd) {
        if (an->requires_grad)
            kern::matmul_nn(an->ensure_grad().data(), nd.grad.data(), bn->value.data(), m, n, k,
                            true);
        if (bn->requires_grad)
            kern::matmul_tn(bn->ensure_grad().data(), nd.grad.data(), an->value.data(), n, m, k,
                            true);
    });
}

// ---------------------------------------------------------------------------
// Softmax, layer norm, lookups, losses
// ---------------------------------------------------------------------------

// Softmax along the last axis of a 2D array. Rows are shifted by their max
// before exponentiation, so finite inputs cannot overflow.
template <typename T>
VarT<T> softmax_rows(const VarT<T>& x) {
    if (x.shape().nd != 2) throw std::invalid_argument("softmax_rows: need 2D, got " + x.shape().str());
    const std::int64_t rows = x.shape()[0], d = x.shape()[1];
    ArrayT<T> out(x.shape());
    for (std::int64_t i = 0; i < rows; ++i) {
        const T* xin = x.val().data() + i * d;
        T* o = out.data() + i * d;
        const T mx = kern::maxv(xin, d);
        T s = 0;
        for (std::int64_t j = 0; j < d; ++j) {
            o[j] = std::exp(xin[j] - mx);
            s += o[j];
        }
        kern::scale(o, T(1) / s, d);
    }
    auto xn = x.node();
    return detail_ad::make_op<T>(std::move(out), {x}, [xn, rows, d](NodeT<T>& n) {
        auto& g = xn->ensure_grad();
        for (std::int64_t i = 0; i < rows; ++i) {
            const T* p = n.value.data() + i * d;
            const T* go = n.grad.data() + i * d;
            const T row = kern::dot(p, go, d);
            T* gi = g.data() + i * d;
            for (std::int64_t j = 0; j < d; ++j) gi[j] += p[j] * (go[j] - row);
        }
    });
}

// Layer normalization along the last axis with affine parameters.
template <typename T>
VarT<T> layer_norm(const VarT<T>& x, const VarT<T>& gain, const VarT<T>& bias, T eps = T(1e-5)) {
    if (x.shape().nd != 2 || gain.shape().nd != 1 || bias.shape().nd != 1 ||
        gain.shape()[0] != x.shape()[1] || bias.shape()[0] != x.shape()[1])
        throw std::invalid_argument("layer_norm: shape mismatch " + x.shape().str() + " / " +
                                    gain.shape().str() + " / " + bias.shape().str());
    const std::int64_t rows = x.shape()[0], d = x.shape()[1];
    ArrayT<T> out(x.shape());
    ArrayT<T> xhat(x.shape());
    ArrayT<T> rstd(Shape{rows});
    for (std::int64_t i = 0; i < rows; ++i) {
        const T* xin = x.val().data() + i * d;
        const T mean = kern::sum(xin, d) / T(d);
        T var = 0;
        for (std::int64_t j = 0; j < d; ++j) {
            const T c = xin[j] - mean;
            var += c * c;
        }
        var /= T(d);
        const T r = T(1) / std::sqrt(var + eps);
        rstd[i] = r;
        T* xh = xhat.data() + i * d;
        T* o = out.data() + i * d;
        for (std::int64_t j = 0; j < d; ++j) {
            xh[j] = (xin[j] - mean) * r;
            o[j] = xh[j] * gain.val()[j] + bias.val()[j];
        }
    }
    auto xn = x.node();
    auto gn = gain.node();
    auto bn = bias.node();
    auto xhatp = std::make_shared<ArrayT<T>>(std::move(xhat));
    auto rstdp = std::make_shared<ArrayT<T>>(std::move(rstd));
    return detail_ad::make_op<T>(
        std::move(out), {x, gain, bias}, [xn, gn, bn, xhatp, rstdp, rows, d](NodeT<T>& n) {
            for (std::int64_t i = 0; i < rows; ++i) {
                const T* go = n.grad.data() + i * d;
                const T* xh = xhatp->data() + i * d;
                if (gn->requires_grad) {
                    auto& gg = gn->ensure_grad();
                    for (std::int64_t j = 0; j < d; ++j) gg[j] += go[j] * xh[j];
                }
                if (bn->requires_grad) kern::acc(bn->ensure_grad().data(), go, d);
                if (xn->requires_grad) {
                    auto& gx = xn->ensure_grad();
                    const T* gv = gn->value.data();
                    T mean_gy = 0, mean_gyxh = 0;
                    for (std::int64_t j = 0; j < d; ++j) {
                        const T gy = go[j] * gv[j];
                        mean_gy += gy;
                        mean_gyxh += gy * xh[j];
                    }
                    mean_gy /= T(d);
                    mean_gyxh /= T(d);
                    const T r = (*rstdp)[i];
                    T* gx_row = gx.data() + i * d;
                    for (std::int64_t j = 0; j < d; ++j) {
                        const T gy = go[j] * gv[j];
                        gx_row[j] += r * (gy - mean_gy - xh[j] * mean_gyxh);
                    }
                }
            }
        });
}

// Row gather: out row i = table row ids[i]. Gradient scatters each output row
// back into its table row, once per occurrence.
template <typename T>
VarT<T> embedding_lookup(const VarT<T>& table, const std::vector<std::int32_t>& ids) {
    if (table.shape().nd != 2) throw std::invalid_argument("embedding_lookup: table must be 2D");
    const std::int64_t v = table.shape()[0], d = table.shape()[1];
    const std::int64_t n = static_cast<std::int64_t>(ids.size());
    ArrayT<T> out(Shape{n, d});
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int32_t id = ids[i];
        if (id < 0 || id >= v)
            throw std::out_of_range("embedding_lookup: id " + std::to_string(id) +
                                    " outside table of " + std::to_string(v) + " rows");
        std::copy_n(table.val().data() + static_cast<std::int64_t>(id) * d, d, out.data() + i * d);
    }
    auto tn = table.node();
    auto ids_copy = std::make_shared<std::vector<std::int32_t>>(ids);
    return detail_ad::make_op<T>(std::move(out), {table}, [tn, ids_copy, d](NodeT<T>& nd) {
        auto& g = tn->ensure_grad();
        const std::int64_t n = static_cast<std::int64_t>(ids_copy->size());
        for (std::int64_t i = 0; i < n; ++i)
            kern::acc(g.data() + static_cast<std::int64_t>((*ids_copy)[i]) * d,
                      nd.grad.data() + i * d, d);
    });
}

template <typename T>
VarT<T> sum_all(const VarT<T>& x) {
    ArrayT<T> out(Shape{1});
    out[0] = kern::sum(x.val().data(), x.val().numel());
    auto xn = x.node();
    return detail_ad::make_op<T>(std::move(out), {x}, [xn](NodeT<T>& n) {
        auto& g = xn->ensure_grad();
        const T gv = n.grad[0];
        for (std::int64_t i = 0; i < g.numel(); ++i) g[i] += gv;
    });
}

template <typename T>
VarT<T> mean_all(const VarT<T>& x) {
    return scale(sum_all(x), T(1) / T(x.val().numel()));
}

inline constexpr double kProbClamp = 1e-9;

// Mean negative log likelihood of the target ids under given probability
// rows. Probabilities are clamped to >= 1e-9 before the log; below the clamp
// the gradient is zero.
template <typename T>
VarT<T> cross_entropy(const VarT<T>& probs, const std::vector<std::int32_t>& targets) {
    if (probs.shape().nd != 2 ||
        static_cast<std::int64_t>(targets.size()) != probs.shape()[0])
        throw std::invalid_argument("cross_entropy: probs " + probs.shape().str() + " vs " +
                                    std::to_string(targets.size()) + " targets");
    const std::int64_t n = probs.shape()[0], v = probs.shape()[1];
    T loss = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const std::int32_t t = targets[i];
        if (t < 0 || t >= v) throw std::out_of_range("cross_entropy: target id out of range");
        const T p = std::max(probs.val().at(i, t), T(kProbClamp));
        loss -= std::log(p);
    }
    ArrayT<T> out(Shape{1});
    out[0] = loss / T(n);
    auto pn = probs.node();
    auto tgt = std::make_shared<std::vector<std::int32_t>>(targets);
    return detail_ad::make_op<T>(std::move(out), {probs}, [pn, tgt, n, v](NodeT<T>& nd) {
        auto& g = pn->ensure_grad();
        const T gv = nd.grad[0];
        for (std::int64_t i = 0; i < n; ++i) {
            const std::int32_t t = (*tgt)[i];
            const T p = pn->value.at(i, t);
            if (p > T(kProbClamp)) g.at(i, t) -= gv / (T(n) * p);
        }
    });
}

// Inverted dropout. The mask is drawn from the given rng and reused in the
// backward pass; p = 0 is the identity.
template <typename T>
VarT<T> dropout(const VarT<T>& x, double p, Rng& rng) {
    if (p <= 0.0) return x;
    if (p >= 1.0) throw std::invalid_argument("dropout: p must be < 1");
    const T keep_scale = T(1.0 / (1.0 - p));
    auto mask = std::make_shared<ArrayT<T>>(x.shape());
    ArrayT<T> out(x.shape());
    const std::int64_t m = out.numel();
    for (std::int64_t i = 0; i < m; ++i) {
        const bool keep = rng.uniform() >= p;
        (*mask)[i] = keep ? keep_scale : T(0);
        out[i] = x.val()[i] * (*mask)[i];
    }
    auto xn = x.node();
    return detail_ad::make_op<T>(std::move(out), {x}, [xn, mask, m](NodeT<T>& n) {
        auto& g = xn->ensure_grad();
        for (std::int64_t i = 0; i < m; ++i) g[i] += n.grad[i] * (*mask)[i];
    });
}

}  // namespace ac
