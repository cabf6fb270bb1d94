#include "kernels_impl.hpp"

#include "matforge/simd/reference.hpp"

namespace matforge::simd::detail {

const KernelTable& scalar_table()
{
    static const KernelTable table{
        Isa::Scalar,
        "scalar",
        &ref::gemm<float>,
        &ref::axpy<float>,
        &ref::scale_shift<float>,
        &ref::relu<float>,
        &ref::relu_backward<float>,
        &ref::sum<float>,
        &ref::dot<float>,
        &ref::sum_sq_diff<float>,
        &ref::sum_abs_diff<float>,
    };
    return table;
}

} // namespace matforge::simd::detail
