#pragma once
// Low-level numeric kernels shared by the tensor layer.
//
// Every kernel has a scalar reference implementation plus SIMD variants
// (AVX2 on x86-64, NEON on aarch64) selected once at startup. The scalar
// versions define the contract; accumulation order is part of it:
//   - elementwise ops, maxv, matmul_nn and matmul_tn are bitwise identical
//     across backends (fixed per-element accumulation order, no FMA fusion)
//   - dot, sum and matmul_nt reduce in lane-parallel order and agree with
//     the reference only up to rounding
// The environment variable ACLM_KERNELS=scalar|avx2|neon overrides detection.

#include <cstddef>

namespace ac::kern {

enum class Backend { scalar, avx2, neon };

Backend active();
const char* backend_name(Backend b);
bool backend_supported(Backend b);
// Throws std::runtime_error if the backend is not supported on this CPU.
void force_backend(Backend b);
// Re-runs detection (honors ACLM_KERNELS).
void auto_backend();

template <typename T>
struct KernelTable {
    T (*dot)(const T* a, const T* b, std::size_t n);
    void (*axpy)(T* y, T a, const T* x, std::size_t n);     // y += a*x
    void (*scale)(T* y, T a, std::size_t n);                // y *= a
    void (*vadd)(T* out, const T* a, const T* b, std::size_t n);
    void (*vsub)(T* out, const T* a, const T* b, std::size_t n);
    void (*vmul)(T* out, const T* a, const T* b, std::size_t n);
    void (*acc)(T* y, const T* x, std::size_t n);           // y += x
    T (*sum)(const T* x, std::size_t n);
    T (*maxv)(const T* x, std::size_t n);                   // n >= 1
    // C (M,N) = A (M,K) * B (K,N); accumulate adds into C instead of overwriting
    void (*matmul_nn)(T* c, const T* a, const T* b, std::size_t m, std::size_t k,
                      std::size_t n, bool accumulate);
    // C (M,N) = A (M,K) * B(N,K)^T
    void (*matmul_nt)(T* c, const T* a, const T* b, std::size_t m, std::size_t k,
                      std::size_t n, bool accumulate);
    // C (M,N) = A(K,M)^T * B (K,N)
    void (*matmul_tn)(T* c, const T* a, const T* b, std::size_t m, std::size_t k,
                      std::size_t n, bool accumulate);
};

const KernelTable<float>& table_f32();
const KernelTable<double>& table_f64();
const KernelTable<float>& scalar_table_f32();
const KernelTable<double>& scalar_table_f64();

template <typename T> const KernelTable<T>& table();
template <> inline const KernelTable<float>& table<float>() { return table_f32(); }
template <> inline const KernelTable<double>& table<double>() { return table_f64(); }

template <typename T> const KernelTable<T>& scalar_table();
template <> inline const KernelTable<float>& scalar_table<float>() { return scalar_table_f32(); }
template <> inline const KernelTable<double>& scalar_table<double>() { return scalar_table_f64(); }

// Convenience wrappers over the active table.
template <typename T> inline T dot(const T* a, const T* b, std::size_t n) { return table<T>().dot(a, b, n); }
template <typename T> inline void axpy(T* y, T a, const T* x, std::size_t n) { table<T>().axpy(y, a, x, n); }
template <typename T> inline void scale(T* y, T a, std::size_t n) { table<T>().scale(y, a, n); }
template <typename T> inline void vadd(T* o, const T* a, const T* b, std::size_t n) { table<T>().vadd(o, a, b, n); }
template <typename T> inline void vsub(T* o, const T* a, const T* b, std::size_t n) { table<T>().vsub(o, a, b, n); }
template <typename T> inline void vmul(T* o, const T* a, const T* b, std::size_t n) { table<T>().vmul(o, a, b, n); }
template <typename T> inline void acc(T* y, const T* x, std::size_t n) { table<T>().acc(y, x, n); }
template <typename T> inline T sum(const T* x, std::size_t n) { return table<T>().sum(x, n); }
template <typename T> inline T maxv(const T* x, std::size_t n) { return table<T>().maxv(x, n); }
template <typename T>
inline void matmul_nn(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n,
                      bool accumulate = false) { table<T>().matmul_nn(c, a, b, m, k, n, accumulate); }
template <typename T>
inline void matmul_nt(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n,
                      bool accumulate = false) { table<T>().matmul_nt(c, a, b, m, k, n, accumulate); }
template <typename T>
inline void matmul_tn(T* c, const T* a, const T* b, std::size_t m, std::size_t k, std::size_t n,
                      bool accumulate = false) { table<T>().matmul_tn(c, a, b, m, k, n, accumulate); }

}  // namespace ac::kern
