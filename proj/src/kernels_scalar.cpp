#include "kernels_scalar.hpp"

namespace ac::kern {

const KernelTable<float>& scalar_table_f32() {
    static const KernelTable<float> t = scalar::make_table<float>();
    return t;
}

const KernelTable<double>& scalar_table_f64() {
    static const KernelTable<double> t = scalar::make_table<double>();
    return t;
}

}  // namespace ac::kern
