#include "kernels_impl.hpp"

#include "matforge/core/error.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace matforge::simd {

namespace {

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* pick_default()
{
    if (const char* env = std::getenv("MATFORGE_SIMD")) {
        const std::string choice(env);
        if (choice == "scalar") {
            return &detail::scalar_table();
        }
        if (choice == "avx2" && isa_available(Isa::Avx2)) {
            return &kernels_for(Isa::Avx2);
        }
    }
    if (isa_available(Isa::Avx2)) {
        return &kernels_for(Isa::Avx2);
    }
    return &detail::scalar_table();
}

} // namespace

bool isa_available(Isa isa) noexcept
{
    switch (isa) {
    case Isa::Scalar:
        return true;
    case Isa::Avx2:
#if defined(MATFORGE_HAVE_AVX2)
        __builtin_cpu_init();
        return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
        return false;
#endif
    }
    return false;
}

const KernelTable& kernels_for(Isa isa)
{
    if (!isa_available(isa)) {
        throw ValueError("requested SIMD kernels are not available on this CPU/build");
    }
#if defined(MATFORGE_HAVE_AVX2)
    if (isa == Isa::Avx2) {
        return detail::avx2_table();
    }
#endif
    return detail::scalar_table();
}

const KernelTable& kernels()
{
    const KernelTable* table = g_active.load(std::memory_order_acquire);
    if (table == nullptr) {
        const KernelTable* chosen = pick_default();
        g_active.compare_exchange_strong(table, chosen, std::memory_order_acq_rel);
        table = g_active.load(std::memory_order_acquire);
    }
    return *table;
}

void select_isa(Isa isa)
{
    g_active.store(&kernels_for(isa), std::memory_order_release);
}

} // namespace matforge::simd
