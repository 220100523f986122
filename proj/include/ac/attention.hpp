#pragma once
// Fused multi-head attention with relative position encodings and segment
// memory, in the Transformer-XL formulation. One graph node with a
// hand-derived backward keeps the graph small; gradient correctness is
// covered by the finite-difference checks in the test suite.
//
// Score for current position i attending absolute position j (j <= mlen+i):
//   S[i,j] = scale * ( (q_i + u) . k_j  +  (q_i + vbias) . r[d] ),
// with d = mlen + i - j the relative distance and r the per-distance
// projected position encodings. P = softmax_j(S), ctx_i = sum_j P[i,j] v_j.

#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "ac/autodiff.hpp"

namespace ac {

namespace detail_attn {

// (B*rows, H*dh) row-major -> per-(b,h) contiguous (B,H,rows,dh)
template <typename T>
void to_head_major(const ArrayT<T>& x, std::int64_t batch, std::int64_t rows, std::int64_t heads,
                   std::int64_t dh, ArrayT<T>& out) {
    const std::int64_t hd = heads * dh;
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t r = 0; r < rows; ++r) {
            const T* src = x.data() + (b * rows + r) * hd;
            for (std::int64_t h = 0; h < heads; ++h)
                std::copy_n(src + h * dh, dh,
                            out.data() + (((b * heads + h) * rows) + r) * dh);
        }
}

template <typename T>
void from_head_major_acc(const ArrayT<T>& hm, std::int64_t batch, std::int64_t rows,
                         std::int64_t heads, std::int64_t dh, ArrayT<T>& out) {
    const std::int64_t hd = heads * dh;
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t r = 0; r < rows; ++r) {
            T* dst = out.data() + (b * rows + r) * hd;
            for (std::int64_t h = 0; h < heads; ++h)
                kern::acc(dst + h * dh, hm.data() + (((b * heads + h) * rows) + r) * dh, dh);
        }
}

}  // namespace detail_attn

// q: (B*qlen, H*dh), k/v: (B*klen, H*dh), r: (klen, H*dh) indexed by relative
// distance, u/vbias: (H*dh). Returns ctx (B*qlen, H*dh). klen - qlen is the
// memory length; attention is causal within the current segment.
template <typename T>
VarT<T> rel_attention(const VarT<T>& q, const VarT<T>& k, const VarT<T>& v, const VarT<T>& r,
                      const VarT<T>& u, const VarT<T>& vbias, std::int64_t batch,
                      std::int64_t qlen, std::int64_t klen, std::int64_t n_head) {
    const std::int64_t hd = q.shape()[1];
    if (hd % n_head)
        throw std::invalid_argument("rel_attention: feature dim not divisible by head count");
    const std::int64_t dh = hd / n_head;
    const std::int64_t mlen = klen - qlen;
    if (mlen < 0) throw std::invalid_argument("rel_attention: klen < qlen");
    if (q.shape()[0] != batch * qlen || k.shape()[0] != batch * klen ||
        v.shape()[0] != batch * klen || r.shape()[0] != klen || r.shape()[1] != hd ||
        k.shape()[1] != hd || v.shape()[1] != hd || u.val().numel() != hd ||
        vbias.val().numel() != hd)
        throw std::invalid_argument("rel_attention: inconsistent operand shapes q" +
                                    q.shape().str() + " k" + k.shape().str() + " r" +
                                    r.shape().str());
    const T scale = T(1) / std::sqrt(T(dh));

    // Head-major scratch, with the content/position biases folded into q.
    auto qu = std::make_shared<ArrayT<T>>(Shape{batch, n_head, qlen, dh});
    auto qv = std::make_shared<ArrayT<T>>(Shape{batch, n_head, qlen, dh});
    auto kh = std::make_shared<ArrayT<T>>(Shape{batch, n_head, klen, dh});
    auto vh = std::make_shared<ArrayT<T>>(Shape{batch, n_head, klen, dh});
    auto rh = std::make_shared<ArrayT<T>>(Shape{n_head, klen, dh});
    detail_attn::to_head_major(q.val(), batch, qlen, n_head, dh, *qu);
    qv->v = qu->v;
    detail_attn::to_head_major(k.val(), batch, klen, n_head, dh, *kh);
    detail_attn::to_head_major(v.val(), batch, klen, n_head, dh, *vh);
    for (std::int64_t d = 0; d < klen; ++d) {
        const T* src = r.val().data() + d * hd;
        for (std::int64_t h = 0; h < n_head; ++h)
            std::copy_n(src + h * dh, dh, rh->data() + (h * klen + d) * dh);
    }
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t h = 0; h < n_head; ++h)
            for (std::int64_t i = 0; i < qlen; ++i) {
                kern::acc(qu->data() + (((b * n_head + h) * qlen) + i) * dh,
                          u.val().data() + h * dh, dh);
                kern::acc(qv->data() + (((b * n_head + h) * qlen) + i) * dh,
                          vbias.val().data() + h * dh, dh);
            }

    // Scores and softmax, stored for backward.
    auto probs = std::make_shared<ArrayT<T>>(Shape{batch, n_head, qlen, klen});
    ArrayT<T> ctx_hm(Shape{batch, n_head, qlen, dh});
    ArrayT<T> bd_row(Shape{klen});
    for (std::int64_t b = 0; b < batch; ++b)
        for (std::int64_t h = 0; h < n_head; ++h) {
            const std::int64_t bh = b * n_head + h;
            const T* qup = qu->data() + bh * qlen * dh;
            const T* qvp = qv->data() + bh * qlen * dh;
            const T* kp = kh->data() + bh * klen * dh;
            const T* vp = vh->data() + bh * klen * dh;
            const T* rp = rh->data() + h * klen * dh;
            T* pp = probs->data() + bh * qlen * klen;
            kern::matmul_nt(pp, qup, kp, qlen, dh, klen, false);
            for (std::int64_t i = 0; i < qlen; ++i) {
                T* row = pp + i * klen;
                const std::int64_t valid = mlen + i + 1;  // causal horizon
                kern::matmul_nt(bd_row.data(), qvp + i * dh, rp, 1, dh, klen, false);
                for (std::int64_t j = 0; j < valid; ++j)
                    row[j] = (row[j] + bd_row[mlen + i - j]) * scale;
                for (std::int64_t j = valid; j < klen; ++j) row[j] = T(-1e30);
                const T mx = kern::maxv(row, klen);
                T s = 0;
                for (std::int64_t j = 0; j < klen; ++j) {
                    row[j] = std::exp(row[j] - mx);
                    s += row[j];
                }
                kern::scale(row, T(1) / s, klen);
            }
            kern::matmul_nn(ctx_hm.data() + bh * qlen * dh, pp, vp, qlen, klen, dh, false);
        }

    ArrayT<T> out(Shape{batch * qlen, hd}, T(0));
    detail_attn::from_head_major_acc(ctx_hm, batch, qlen, n_head, dh, out);

    auto qn = q.node();
    auto kn = k.node();
    auto vn = v.node();
    auto rn = r.node();
    auto un = u.node();
    auto vbn = vbias.node();
    return detail_ad::make_op<T>(
        std::move(out), {q, k, v, r, u, vbias},
        [=](NodeT<T>& nd) {
            ArrayT<T> dctx(Shape{batch, n_head, qlen, dh});
            detail_attn::to_head_major(nd.grad, batch, qlen, n_head, dh, dctx);

            ArrayT<T> dqu(Shape{batch, n_head, qlen, dh}, T(0));
            ArrayT<T> dqv(Shape{batch, n_head, qlen, dh}, T(0));
            ArrayT<T> dkh(Shape{batch, n_head, klen, dh}, T(0));
            ArrayT<T> dvh(Shape{batch, n_head, klen, dh}, T(0));
            ArrayT<T> drh(Shape{n_head, klen, dh}, T(0));
            ArrayT<T> dp(Shape{qlen, klen});
            for (std::int64_t b = 0; b < batch; ++b)
                for (std::int64_t h = 0; h < n_head; ++h) {
                    const std::int64_t bh = b * n_head + h;
                    const T* pp = probs->data() + bh * qlen * klen;
                    const T* vp = vh->data() + bh * klen * dh;
                    const T* kp = kh->data() + bh * klen * dh;
                    const T* qup = qu->data() + bh * qlen * dh;
                    const T* qvp = qv->data() + bh * qlen * dh;
                    const T* rp = rh->data() + h * klen * dh;
                    const T* dc = dctx.data() + bh * qlen * dh;

                    kern::matmul_nt(dp.data(), dc, vp, qlen, dh, klen, false);
                    kern::matmul_tn(dvh.data() + bh * klen * dh, pp, dc, klen, qlen, dh, true);

                    // softmax backward in place, then the scale factor
                    for (std::int64_t i = 0; i < qlen; ++i) {
                        T* dsr = dp.data() + i * klen;
                        const T* pr = pp + i * klen;
                        const T row = kern::dot(pr, dsr, klen);
                        for (std::int64_t j = 0; j < klen; ++j)
                            dsr[j] = pr[j] * (dsr[j] - row) * scale;
                    }

                    kern::matmul_nn(dqu.data() + bh * qlen * dh, dp.data(), kp, qlen, klen, dh,
                                    true);
                    kern::matmul_tn(dkh.data() + bh * klen * dh, dp.data(), qup, klen, qlen, dh,
                                    true);
                    for (std::int64_t i = 0; i < qlen; ++i) {
                        const std::int64_t valid = mlen + i + 1;
                        const T* dsr = dp.data() + i * klen;
                        T* dqv_i = dqv.data() + (bh * qlen + i) * dh;
                        for (std::int64_t j = 0; j < valid; ++j) {
                            const T w = dsr[j];
                            if (w == T(0)) continue;
                            const std::int64_t d = mlen + i - j;
                            kern::axpy(dqv_i, w, rp + d * dh, dh);
                            kern::axpy(drh.data() + (h * klen + d) * dh, w,
                                       qvp + i * dh, dh);
                        }
                    }
                }

            if (qn->requires_grad) {
                auto& g = qn->ensure_grad();
                detail_attn::from_head_major_acc(dqu, batch, qlen, n_head, dh, g);
                detail_attn::from_head_major_acc(dqv, batch, qlen, n_head, dh, g);
            }
            if (kn->requires_grad)
                detail_attn::from_head_major_acc(dkh, batch, klen, n_head, dh, kn->ensure_grad());
            if (vn->requires_grad)
                detail_attn::from_head_major_acc(dvh, batch, klen, n_head, dh, vn->ensure_grad());
            if (rn->requires_grad) {
                auto& g = rn->ensure_grad();
                for (std::int64_t d = 0; d < klen; ++d)
                    for (std::int64_t h = 0; h < n_head; ++h)
                        kern::acc(g.data() + d * hd + h * dh, drh.data() + (h * klen + d) * dh,
                                  dh);
            }
            if (un->requires_grad) {
                auto& g = un->ensure_grad();
                for (std::int64_t b = 0; b < batch; ++b)
                    for (std::int64_t h = 0; h < n_head; ++h)
                        for (std::int64_t i = 0; i < qlen; ++i)
                            kern::acc(g.data() + h * dh,
                                      dqu.data() + (((b * n_head + h) * qlen) + i) * dh, dh);
            }
            if (vbn->requires_grad) {
                auto& g = vbn->ensure_grad();
                for (std::int64_t b = 0; b < batch; ++b)
                    for (std::int64_t h = 0; h < n_head; ++h)
                        for (std::int64_t i = 0; i < qlen; ++i)
                            kern::acc(g.data() + h * dh,
                                      dqv.data() + (((b * n_head + h) * qlen) + i) * dh, dh);
            }
        });
}

// Sinusoidal encodings for relative distances 0..len-1, dimension d_model.
template <typename T>
ArrayT<T> sinusoid_positions(std::int64_t len, std::int64_t d_model) {
    ArrayT<T> out(Shape{len, d_model});
    const std::int64_t half = d_model / 2;
    for (std::int64_t pos = 0; pos < len; ++pos)
        for (std::int64_t i = 0; i < half; ++i) {
            const double freq = 1.0 / std::pow(10000.0, 2.0 * double(i) / double(d_model));
            out.at(pos, i) = T(std::sin(double(pos) * freq));
            out.at(pos, half + i) = T(std::cos(double(pos) * freq));
        }
    return out;  // odd d_model: last column stays zero
}

}  // namespace ac
