#include <cstdlib>
#include <cstring>

#include "stcsense/kernels.hpp"

namespace stcsense::kernels {

const KernelTable* avx2_table_impl();

const KernelTable* avx2_table() {
#if defined(__x86_64__) || defined(_M_X64)
    static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
    return ok ? avx2_table_impl() : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable* chosen = [] {
        const char* env = std::getenv("STCSENSE_FORCE_SCALAR");
        if (env && std::strcmp(env, "0") != 0 && *env) return &scalar_table();
        const KernelTable* t = avx2_table();
        return t ? t : &scalar_table();
    }();
    return *chosen;
}

}  // namespace stcsense::kernels
