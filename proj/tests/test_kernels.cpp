// Scalar-vs-SIMD equivalence. Elementwise kernels, maxv and the nn/tn
// matmuls promise bitwise equality with the scalar reference; the
// reduction-order kernels (dot, sum, nt matmul) get tolerances.

#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "ac/kernels.hpp"
#include "ac/rng.hpp"

using namespace ac;

namespace {

template <typename T>
std::vector<T> random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    std::vector<T> v(n);
    for (auto& x : v) x = static_cast<T>(lo + (hi - lo) * rng.uniform());
    return v;
}

template <typename T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
    return m;
}

const std::vector<std::size_t> kSizes = {1, 2, 3, 7, 8, 9, 15, 16, 17, 31, 64, 100, 255};

}  // namespace

TEST_CASE("active backend is available") {
    CHECK(kern::backend_supported(kern::active()));
    MESSAGE("active kernel backend: ", kern::backend_name(kern::active()));
}

TEST_CASE_TEMPLATE("elementwise kernels match scalar bitwise", T, float, double) {
    Rng rng(42);
    const auto& act = kern::table<T>();
    const auto& ref = kern::scalar_table<T>();
    for (std::size_t n : kSizes) {
        auto a = random_vec<T>(rng, n);
        auto b = random_vec<T>(rng, n);
        std::vector<T> out1(n), out2(n);

        act.vadd(out1.data(), a.data(), b.data(), n);
        ref.vadd(out2.data(), a.data(), b.data(), n);
        CHECK(out1 == out2);

        act.vsub(out1.data(), a.data(), b.data(), n);
        ref.vsub(out2.data(), a.data(), b.data(), n);
        CHECK(out1 == out2);

        act.vmul(out1.data(), a.data(), b.data(), n);
        ref.vmul(out2.data(), a.data(), b.data(), n);
        CHECK(out1 == out2);

        out1 = a;
        out2 = a;
        act.acc(out1.data(), b.data(), n);
        ref.acc(out2.data(), b.data(), n);
        CHECK(out1 == out2);

        out1 = a;
        out2 = a;
        act.scale(out1.data(), T(0.37), n);
        ref.scale(out2.data(), T(0.37), n);
        CHECK(out1 == out2);

        out1 = a;
        out2 = a;
        act.axpy(out1.data(), T(-1.4), b.data(), n);
        ref.axpy(out2.data(), T(-1.4), b.data(), n);
        CHECK(out1 == out2);

        CHECK(act.maxv(a.data(), n) == ref.maxv(a.data(), n));
    }
}

TEST_CASE_TEMPLATE("reductions match scalar within rounding", T, float, double) {
    Rng rng(7);
    const auto& act = kern::table<T>();
    const auto& ref = kern::scalar_table<T>();
    const double tol = std::is_same_v<T, float> ? 1e-4 : 1e-12;
    for (std::size_t n : kSizes) {
        auto a = random_vec<T>(rng, n);
        auto b = random_vec<T>(rng, n);
        CHECK(std::abs(act.dot(a.data(), b.data(), n) - ref.dot(a.data(), b.data(), n)) <=
              tol * static_cast<double>(n));
        CHECK(std::abs(act.sum(a.data(), n) - ref.sum(a.data(), n)) <=
              tol * static_cast<double>(n));
    }
}

TEST_CASE_TEMPLATE("matmul_nn and matmul_tn match scalar bitwise", T, float, double) {
    Rng rng(11);
    const auto& act = kern::table<T>();
    const auto& ref = kern::scalar_table<T>();
    const std::vector<std::array<std::size_t, 3>> dims = {
        {1, 1, 1}, {2, 3, 4}, {5, 7, 9}, {8, 8, 8},
        {3, 16, 17}, {13, 5, 24}, {1, 32, 1}, {9, 9, 33}};
    for (auto [m, k, n] : dims) {
        auto a = random_vec<T>(rng, m * k);
        auto at = random_vec<T>(rng, k * m);
        auto b = random_vec<T>(rng, k * n);
        std::vector<T> c1(m * n), c2(m * n);
        for (bool accumulate : {false, true}) {
            auto seed1 = random_vec<T>(rng, m * n);
            c1 = seed1;
            c2 = seed1;
            act.matmul_nn(c1.data(), a.data(), b.data(), m, k, n, accumulate);
            ref.matmul_nn(c2.data(), a.data(), b.data(), m, k, n, accumulate);
            CHECK(c1 == c2);

            c1 = seed1;
            c2 = seed1;
            act.matmul_tn(c1.data(), at.data(), b.data(), m, k, n, accumulate);
            ref.matmul_tn(c2.data(), at.data(), b.data(), m, k, n, accumulate);
            CHECK(c1 == c2);
        }
    }
}

TEST_CASE_TEMPLATE("matmul_nt matches scalar within rounding", T, float, double) {
    Rng rng(13);
    const auto& act = kern::table<T>();
    const auto& ref = kern::scalar_table<T>();
    const double tol = std::is_same_v<T, float> ? 1e-4 : 1e-12;
    const std::vector<std::array<std::size_t, 3>> dims = {
        {2, 3, 4}, {8, 16, 8}, {5, 33, 7}, {1, 100, 1}};
    for (auto [m, k, n] : dims) {
        auto a = random_vec<T>(rng, m * k);
        auto b = random_vec<T>(rng, n * k);
        std::vector<T> c1(m * n), c2(m * n);
        act.matmul_nt(c1.data(), a.data(), b.data(), m, k, n, false);
        ref.matmul_nt(c2.data(), a.data(), b.data(), m, k, n, false);
        CHECK(max_abs_diff(c1, c2) <= tol * static_cast<double>(k));
    }
}

TEST_CASE("forcing the scalar backend changes the active table") {
    const auto before = kern::active();
    kern::force_backend(kern::Backend::scalar);
    CHECK(kern::active() == kern::Backend::scalar);
    kern::auto_backend();
    CHECK(kern::active() == before);
}
