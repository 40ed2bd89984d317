#pragma once

#include "cdskit/kernels.hpp"

namespace cdskit::kernels::detail {

#if defined(CDSKIT_HAVE_AVX2)
const KernelTable& avx2_table_unchecked();
#endif

}  // namespace cdskit::kernels::detail
