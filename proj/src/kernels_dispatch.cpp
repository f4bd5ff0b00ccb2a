#include <atomic>
#include <cstdlib>
#include <string>

#include "occlab/kernels.hpp"

namespace occlab::kernels {

#ifndef OCCLAB_HAVE_AVX2
const KernelTable* avx2_table() { return nullptr; }
#endif

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

namespace {

const KernelTable* pick_default() {
    if (const char* env = std::getenv("OCCLAB_KERNELS")) {
        if (std::string(env) == "scalar") return &scalar_table();
    }
    if (cpu_has_avx2() && avx2_table() != nullptr) return avx2_table();
    return &scalar_table();
}

std::atomic<const KernelTable*>& slot() {
    static std::atomic<const KernelTable*> current{pick_default()};
    return current;
}

}  // namespace

const KernelTable& active() { return *slot().load(std::memory_order_acquire); }

bool set_backend(Backend b) {
    if (b == Backend::Scalar) {
        slot().store(&scalar_table(), std::memory_order_release);
        return true;
    }
    if (!cpu_has_avx2() || avx2_table() == nullptr) return false;
    slot().store(avx2_table(), std::memory_order_release);
    return true;
}

std::string_view backend_name(Backend b) { return b == Backend::Scalar ? "scalar" : "avx2"; }

}  // namespace occlab::kernels
