#include "cdskit/kernels.hpp"
#include "kernels_impl.hpp"

#include <cstdlib>
#include <string_view>

namespace cdskit::kernels {

const KernelTable* avx2_table()
{
#if defined(CDSKIT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    static const bool supported = [] {
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    }();
    return supported ? &detail::avx2_table_unchecked() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active()
{
    static const KernelTable& chosen = []() -> const KernelTable& {
        if (const char* env = std::getenv("CDSKIT_SIMD"); env && std::string_view(env) == "scalar")
            return scalar_table();
        if (const KernelTable* t = avx2_table())
            return *t;
        return scalar_table();
    }();
    return chosen;
}

}  // namespace cdskit::kernels
