#pragma once
// Scalar reference kernels. These define the numeric contract; the SIMD
// backends must reproduce the same accumulation order wherever the public
// header promises bitwise equality. Compiled with -ffp-contract=off.

#include <cstddef>

#include "ac/kernels.hpp"

namespace ac::kern::scalar {

template <typename T>
T dot(const T* a, const T* b, std::size_t n) {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

template <typename T>
void axpy(T* y, T a, const T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void scale(T* y, T a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] *= a;
}

template <typename T>
void vadd(T* out, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

template <typename T>
void vsub(T* out, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

template <typename T>
void vmul(T* out, const T* a, const T* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

template <typename T>
void acc(T* y, const T* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += x[i];
}

template <typename T>
T sum(const T* x, std::size_t n) {
    T s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
}

template <typename T>
T maxv(const T* x, std::size_t n) {
    T m = x[0];
    for (std::size_t i = 1; i < n; ++i)
        if (x[i] > m) m = x[i];
    return m;
}

template <typename T>
void zero_or_keep(T* c, std::size_t n, bool accumulate) {
    if (!accumulate)
        for (std::size_t i = 0; i < n; ++i) c[i] = 0;
}

// i-k-j loop order: each C[i,j] accumulates over k ascending.
template <typename T>
void matmul_nn(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
    zero_or_keep(c, m * n, accumulate);
    for (std::size_t i = 0; i < m; ++i) {
        T* crow = c + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const T av = a[i * k + p];
            const T* brow = b + p * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[i,j] = dot(A row i, B row j); B is (N,K).
template <typename T>
void matmul_nt(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            T s = 0;
            const T* brow = b + j * k;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            crow[j] = accumulate ? crow[j] + s : s;
        }
    }
}

// k-i-j loop order: each C[i,j] accumulates over k ascending. A is (K,M).
template <typename T>
void matmul_tn(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n,
               bool accumulate) {
    zero_or_keep(c, m * n, accumulate);
    for (std::size_t p = 0; p < k; ++p) {
        const T* arow = a + p * m;
        const T* brow = b + p * n;
        for (std::size_t i = 0; i < m; ++i) {
            const T av = arow[i];
            T* crow = c + i * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

template <typename T>
KernelTable<T> make_table() {
    KernelTable<T> t;
    t.dot = &dot<T>;
    t.axpy = &axpy<T>;
    t.scale = &scale<T>;
    t.vadd = &vadd<T>;
    t.vsub = &vsub<T>;
    t.vmul = &vmul<T>;
    t.acc = &acc<T>;
    t.sum = &sum<T>;
    t.maxv = &maxv<T>;
    t.matmul_nn = &matmul_nn<T>;
    t.matmul_nt = &matmul_nt<T>;
    t.matmul_tn = &matmul_tn<T>;
    return t;
}

}  // namespace ac::kern::scalar
