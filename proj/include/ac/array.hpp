#pragma once
// Dense row-major arrays of up to 4 axes, float or double.

#include <array>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ac {

struct Shape {
    std::array<std::int64_t, 4> d{0, 0, 0, 0};
    int nd = 0;

    Shape() = default;
    Shape(std::initializer_list<std::int64_t> dims) {
        if (dims.size() > 4) throw std::invalid_argument("Shape: more than 4 axes");
        for (auto v : dims) d[nd++] = v;
    }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (int i = 0; i < nd; ++i) n *= d[i];
        return nd == 0 ? 0 : n;
    }
    std::int64_t operator[](int i) const { return d[i]; }
    bool operator==(const Shape& o) const { return nd == o.nd && d == o.d; }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    std::string str() const {
        std::ostringstream os;
        os << "(";
        for (int i = 0; i < nd; ++i) os << (i ? "," : "") << d[i];
        os << ")";
        return os.str();
    }
};

inline void check_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (a != b)
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.str() + " vs " +
                                    b.str());
}

// Counts elements allocated through ArrayT since the last reset. Used as an
// instrumentation oracle for the analytic memory estimator.
std::int64_t alloc_elements();
void reset_alloc_elements();
namespace detail {
void bump_alloc(std::int64_t n);
}

template <typename T>
struct ArrayT {
    Shape shape;
    std::vector<T> v;

    ArrayT() = default;
    explicit ArrayT(Shape s) : shape(s), v(static_cast<std::size_t>(s.numel())) {
        detail::bump_alloc(s.numel());
    }
    ArrayT(Shape s, T fill) : shape(s), v(static_cast<std::size_t>(s.numel()), fill) {
        detail::bump_alloc(s.numel());
    }
    ArrayT(Shape s, std::vector<T> data) : shape(s), v(std::move(data)) {
        if (static_cast<std::int64_t>(v.size()) != s.numel())
            throw std::invalid_argument("ArrayT: data length " + std::to_string(v.size()) +
                                        " does not match shape " + s.str());
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(v.size()); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T& operator[](std::int64_t i) { return v[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return v[static_cast<std::size_t>(i)]; }

    // 2D accessors (row-major)
    T& at(std::int64_t i, std::int64_t j) { return v[static_cast<std::size_t>(i * shape[1] + j)]; }
    const T& at(std::int64_t i, std::int64_t j) const {
        return v[static_cast<std::size_t>(i * shape[1] + j)];
    }

    std::int64_t rows() const { return shape.nd >= 1 ? shape[0] : 0; }
    std::int64_t cols() const { return shape.nd >= 2 ? shape[1] : 1; }

    void fill(T x) { std::fill(v.begin(), v.end(), x); }

    template <typename U>
    ArrayT<U> cast() const {
        ArrayT<U> out(shape);
        for (std::size_t i = 0; i < v.size(); ++i) out.v[i] = static_cast<U>(v[i]);
        return out;
    }
};

using ArrayF = ArrayT<float>;
using ArrayD = ArrayT<double>;

}  // namespace ac
