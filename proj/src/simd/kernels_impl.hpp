#pragma once

#include "matforge/simd/kernels.hpp"

namespace matforge::simd::detail {

const KernelTable& scalar_table();

#if defined(MATFORGE_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

} // namespace matforge::simd::detail
