#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "ac/kernels.hpp"

namespace ac::kern {

#if defined(__x86_64__) || defined(_M_X64)
const KernelTable<float>& avx2_table_f32();
const KernelTable<double>& avx2_table_f64();
#endif
#if defined(__aarch64__)
const KernelTable<float>& neon_table_f32();
const KernelTable<double>& neon_table_f64();
#endif

namespace {

bool cpu_has(Backend b) {
    switch (b) {
        case Backend::scalar:
            return true;
        case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
        case Backend::neon:
#if defined(__aarch64__)
            return true;  // baseline on aarch64
#else
            return false;
#endif
    }
    return false;
}

Backend detect() {
    if (const char* env = std::getenv("ACLM_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && cpu_has(Backend::avx2)) return Backend::avx2;
        if (std::strcmp(env, "neon") == 0 && cpu_has(Backend::neon)) return Backend::neon;
        if (std::strcmp(env, "auto") != 0)
            throw std::runtime_error(std::string("ACLM_KERNELS requests unavailable backend: ") + env);
    }
    if (cpu_has(Backend::avx2)) return Backend::avx2;
    if (cpu_has(Backend::neon)) return Backend::neon;
    return Backend::scalar;
}

std::atomic<Backend> g_backend{detect()};

}  // namespace

Backend active() { return g_backend.load(std::memory_order_relaxed); }

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::scalar: return "scalar";
        case Backend::avx2: return "avx2";
        case Backend::neon: return "neon";
    }
    return "?";
}

bool backend_supported(Backend b) { return cpu_has(b); }

void force_backend(Backend b) {
    if (!cpu_has(b))
        throw std::runtime_error(std::string("kernel backend not supported on this CPU: ") +
                                 backend_name(b));
    g_backend.store(b, std::memory_order_relaxed);
}

void auto_backend() { g_backend.store(detect(), std::memory_order_relaxed); }

const KernelTable<float>& table_f32() {
    switch (active()) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2: return avx2_table_f32();
#endif
#if defined(__aarch64__)
        case Backend::neon: return neon_table_f32();
#endif
        default: return scalar_table_f32();
    }
}

const KernelTable<double>& table_f64() {
    switch (active()) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2: return avx2_table_f64();
#endif
#if defined(__aarch64__)
        case Backend::neon: return neon_table_f64();
#endif
        default: return scalar_table_f64();
    }
}

}  // namespace ac::kern
