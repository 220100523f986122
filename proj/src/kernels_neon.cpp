// NEON kernel variants for aarch64. Same contract as the AVX2 backend:
// matmul_nn / matmul_tn and elementwise kernels keep the reference
// accumulation order; dot / sum / matmul_nt reduce lane-parallel.

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cstddef>

#include "ac/kernels.hpp"
#include "kernels_scalar.hpp"

namespace ac::kern::neon {

float dot_f32(const float* a, const float* b, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vfmaq_f32(acc, vld1q_f32(a + i), vld1q_f32(b + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_f32(float* y, float a, const float* x, std::size_t n) {
    const float32x4_t av = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), vmulq_f32(av, vld1q_f32(x + i))));
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_f32(float* y, float a, std::size_t n) {
    const float32x4_t av = vdupq_n_f32(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vmulq_f32(av, vld1q_f32(y + i)));
    for (; i < n; ++i) y[i] *= a;
}

void vadd_f32(float* out, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vaddq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vsub_f32(float* out, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vsubq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void vmul_f32(float* out, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(out + i, vmulq_f32(vld1q_f32(a + i), vld1q_f32(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void acc_f32(float* y, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) vst1q_f32(y + i, vaddq_f32(vld1q_f32(y + i), vld1q_f32(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

float sum_f32(const float* x, std::size_t n) {
    float32x4_t acc = vdupq_n_f32(0.0f);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = vaddq_f32(acc, vld1q_f32(x + i));
    float s = vaddvq_f32(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float maxv_f32(const float* x, std::size_t n) {
    if (n < 4) return scalar::maxv(x, n);
    float32x4_t m = vld1q_f32(x);
    std::size_t i = 4;
    for (; i + 4 <= n; i += 4) m = vmaxq_f32(m, vld1q_f32(x + i));
    float r = vmaxvq_f32(m);
    for (; i < n; ++i)
        if (x[i] > r) r = x[i];
    return r;
}

void matmul_nn_f32(float* c, const float* a, const float* b, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    scalar::zero_or_keep(c, m * n, accumulate);
    for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const float av = a[i * k + p];
            const float32x4_t avv = vdupq_n_f32(av);
            const float* brow = b + p * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4)
                vst1q_f32(crow + j, vaddq_f32(vld1q_f32(crow + j),
                                              vmulq_f32(avv, vld1q_f32(brow + j))));
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_nt_f32(float* c, const float* a, const float* b, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const float* arow = a + i * k;
        float* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const float s = dot_f32(arow, b + j * k, k);
            crow[j] = accumulate ? crow[j] + s : s;
        }
    }
}

void matmul_tn_f32(float* c, const float* a, const float* b, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    scalar::zero_or_keep(c, m * n, accumulate);
    for (std::size_t p = 0; p < k; ++p) {
        const float* arow = a + p * m;
        const float* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const float av = arow[i];
            const float32x4_t avv = vdupq_n_f32(av);
            float* crow = c + i * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4)
                vst1q_f32(crow + j, vaddq_f32(vld1q_f32(crow + j),
                                              vmulq_f32(avv, vld1q_f32(brow + j))));
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace ac::kern::neon

namespace ac::kern {

const KernelTable<float>& neon_table_f32() {
    static const KernelTable<float> t = [] {
        KernelTable<float> x;
        x.dot = &neon::dot_f32;
        x.axpy = &neon::axpy_f32;
        x.scale = &neon::scale_f32;
        x.vadd = &neon::vadd_f32;
        x.vsub = &neon::vsub_f32;
        x.vmul = &neon::vmul_f32;
        x.acc = &neon::acc_f32;
        x.sum = &neon::sum_f32;
        x.maxv = &neon::maxv_f32;
        x.matmul_nn = &neon::matmul_nn_f32;
        x.matmul_nt = &neon::matmul_nt_f32;
        x.matmul_tn = &neon::matmul_tn_f32;
        return x;
    }();
    return t;
}

// f64 stays on the scalar path on aarch64; the 64-bit mode is a
// verification path, not a throughput path.
const KernelTable<double>& neon_table_f64() { return scalar_table_f64(); }

}  // namespace ac::kern

#endif  // aarch64
