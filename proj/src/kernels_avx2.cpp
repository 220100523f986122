// AVX2 kernel variants. Compiled with -mavx2 -mfma -ffp-contract=off.
//
// matmul_nn / matmul_tn and the elementwise kernels keep the reference
// accumulation order (mul + add, k innermost-sequential), so they are
// bitwise identical to the scalar backend. dot / sum / matmul_nt reduce
// across lanes and only agree up to rounding.

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cstddef>

#include "ac/kernels.hpp"
#include "kernels_scalar.hpp"

namespace ac::kern::avx2 {

namespace {

inline float hsum(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    __m128 s = _mm_add_ps(lo, hi);
    s = _mm_hadd_ps(s, s);
    s = _mm_hadd_ps(s, s);
    return _mm_cvtss_f32(s);
}

inline double hsum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    s = _mm_add_sd(s, _mm_unpackhi_pd(s, s));
    return _mm_cvtsd_f64(s);
}

inline float hmax(__m256 v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    __m128 m = _mm_max_ps(lo, hi);
    m = _mm_max_ps(m, _mm_movehl_ps(m, m));
    m = _mm_max_ps(m, _mm_shuffle_ps(m, m, _MM_SHUFFLE(1, 1, 1, 1)));
    return _mm_cvtss_f32(m);
}

}  // namespace

float dot_f32(const float* a, const float* b, std::size_t n) {
    __m256 acc0 = _mm256_setzero_ps();
    __m256 acc1 = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
        acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8), acc1);
    }
    for (; i + 8 <= n; i += 8)
        acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    float s = hsum(_mm256_add_ps(acc0, acc1));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double dot_f64(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_f32(float* y, float a, const float* x, std::size_t n) {
    const __m256 av = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 r = _mm256_add_ps(_mm256_loadu_ps(y + i),
                                 _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
        _mm256_storeu_ps(y + i, r);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_f64(double* y, double a, const double* x, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i),
                                  _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, r);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_f32(float* y, float a, std::size_t n) {
    const __m256 av = _mm256_set1_ps(a);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_mul_ps(av, _mm256_loadu_ps(y + i)));
    for (; i < n; ++i) y[i] *= a;
}

void scale_f64(double* y, double a, std::size_t n) {
    const __m256d av = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_mul_pd(av, _mm256_loadu_pd(y + i)));
    for (; i < n; ++i) y[i] *= a;
}

void vadd_f32(float* out, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vadd_f64(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void vsub_f32(float* out, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void vsub_f64(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void vmul_f32(float* out, const float* a, const float* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void vmul_f64(double* out, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void acc_f32(float* y, const float* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8)
        _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), _mm256_loadu_ps(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

void acc_f64(double* y, const double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4)
        _mm256_storeu_pd(y + i, _mm256_add_pd(_mm256_loadu_pd(y + i), _mm256_loadu_pd(x + i)));
    for (; i < n; ++i) y[i] += x[i];
}

float sum_f32(const float* x, std::size_t n) {
    __m256 acc = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
    float s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

double sum_f64(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    double s = hsum(acc);
    for (; i < n; ++i) s += x[i];
    return s;
}

float maxv_f32(const float* x, std::size_t n) {
    if (n < 8) return scalar::maxv(x, n);
    __m256 m = _mm256_loadu_ps(x);
    std::size_t i = 8;
    for (; i + 8 <= n; i += 8) m = _mm256_max_ps(m, _mm256_loadu_ps(x + i));
    float r = hmax(m);
    for (; i < n; ++i)
        if (x[i] > r) r = x[i];
    return r;
}

double maxv_f64(const double* x, std::size_t n) {
    return scalar::maxv(x, n);
}

// Same i-k-j order as the reference; mul+add keeps per-element rounding
// identical to the scalar kernel.
void matmul_nn_f32(float* c, const float* a, const float* b, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    scalar::zero_or_keep(c, m * n, accumulate);
    for (std::size_t i = 0; i < m; ++i) {
        float* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const float av = a[i * k + p];
            const __m256 avv = _mm256_set1_ps(av);
            const float* brow = b + p * n;
            std::size_t j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256 r = _mm256_add_ps(_mm256_loadu_ps(crow + j),
                                         _mm256_mul_ps(avv, _mm256_loadu_ps(brow + j)));
                _mm256_storeu_ps(crow + j, r);
            }
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
            const __m256 avv = _mm256_set1_ps(av);
            float* crow = c + i * n;
            std::size_t j = 0;
            for (; j + 8 <= n; j += 8) {
                __m256 r = _mm256_add_ps(_mm256_loadu_ps(crow + j),
                                         _mm256_mul_ps(avv, _mm256_loadu_ps(brow + j)));
                _mm256_storeu_ps(crow + j, r);
            }
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_nn_f64(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    scalar::zero_or_keep(c, m * n, accumulate);
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a[i * k + p];
            const __m256d avv = _mm256_set1_pd(av);
            const double* brow = b + p * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d r = _mm256_add_pd(_mm256_loadu_pd(crow + j),
                                          _mm256_mul_pd(avv, _mm256_loadu_pd(brow + j)));
                _mm256_storeu_pd(crow + j, r);
            }
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void matmul_nt_f64(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            const double s = dot_f64(arow, b + j * k, k);
            crow[j] = accumulate ? crow[j] + s : s;
        }
    }
}

void matmul_tn_f64(double* c, const double* a, const double* b, std::size_t m, std::size_t k,
                   std::size_t n, bool accumulate) {
    scalar::zero_or_keep(c, m * n, accumulate);
    for (std::size_t p = 0; p < k; ++p) {
        const double* arow = a + p * m;
        const double* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const double av = arow[i];
            const __m256d avv = _mm256_set1_pd(av);
            double* crow = c + i * n;
            std::size_t j = 0;
            for (; j + 4 <= n; j += 4) {
                __m256d r = _mm256_add_pd(_mm256_loadu_pd(crow + j),
                                          _mm256_mul_pd(avv, _mm256_loadu_pd(brow + j)));
                _mm256_storeu_pd(crow + j, r);
            }
            for (; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace ac::kern::avx2

namespace ac::kern {

const KernelTable<float>& avx2_table_f32() {
    static const KernelTable<float> t = [] {
        KernelTable<float> x;
        x.dot = &avx2::dot_f32;
        x.axpy = &avx2::axpy_f32;
        x.scale = &avx2::scale_f32;
        x.vadd = &avx2::vadd_f32;
        x.vsub = &avx2::vsub_f32;
        x.vmul = &avx2::vmul_f32;
        x.acc = &avx2::acc_f32;
        x.sum = &avx2::sum_f32;
        x.maxv = &avx2::maxv_f32;
        x.matmul_nn = &avx2::matmul_nn_f32;
        x.matmul_nt = &avx2::matmul_nt_f32;
        x.matmul_tn = &avx2::matmul_tn_f32;
        return x;
    }();
    return t;
}

const KernelTable<double>& avx2_table_f64() {
    static const KernelTable<double> t = [] {
        KernelTable<double> x;
        x.dot = &avx2::dot_f64;
        x.axpy = &avx2::axpy_f64;
        x.scale = &avx2::scale_f64;
        x.vadd = &avx2::vadd_f64;
        x.vsub = &avx2::vsub_f64;
        x.vmul = &avx2::vmul_f64;
        x.acc = &avx2::acc_f64;
        x.sum = &avx2::sum_f64;
        x.maxv = &avx2::maxv_f64;
        x.matmul_nn = &avx2::matmul_nn_f64;
        x.matmul_nt = &avx2::matmul_nt_f64;
        x.matmul_tn = &avx2::matmul_tn_f64;
        return x;
    }();
    return t;
}

}  // namespace ac::kern

#endif  // x86-64
