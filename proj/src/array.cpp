#include "ac/array.hpp"

namespace ac {

namespace {
thread_local std::int64_t t_alloc_elements = 0;
}

std::int64_t alloc_elements() { return t_alloc_elements; }
void reset_alloc_elements() { t_alloc_elements = 0; }

namespace detail {
void bump_alloc(std::int64_t n) { t_alloc_elements += n; }
}  // namespace detail

}  // namespace ac
