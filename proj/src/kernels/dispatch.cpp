#include <atomic>
#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

#include "ivprop/kernels.hpp"

namespace ivp::kern {
namespace {

const Backend* pick_auto() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return &avx2_backend;
#endif
#if defined(__aarch64__)
    return &neon_backend;
#endif
    return &scalar_backend;
}

const Backend* resolve(const char* name) {
    if (!name || std::strcmp(name, "auto") == 0) return pick_auto();
    if (std::strcmp(name, "scalar") == 0) return &scalar_backend;
#if defined(__x86_64__) || defined(_M_X64)
    if (std::strcmp(name, "avx2") == 0) {
        if (!(__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")))
            throw std::runtime_error("kernels: avx2 requested but not supported by this CPU");
        return &avx2_backend;
    }
#endif
#if defined(__aarch64__)
    if (std::strcmp(name, "neon") == 0) return &neon_backend;
#endif
    throw std::runtime_error(std::string("kernels: unknown backend '") + name + "'");
}

std::atomic<const Backend*> g_active{nullptr};

const Backend* init_from_env() {
    const char* env = std::getenv("IVPROP_KERNELS");
    return resolve(env);
}

}  // namespace

const Backend& active() {
    const Backend* b = g_active.load(std::memory_order_acquire);
    if (!b) {
        b = init_from_env();
        g_active.store(b, std::memory_order_release);
    }
    return *b;
}

void force_backend(const char* name) {
    g_active.store(resolve(name), std::memory_order_release);
}

}  // namespace ivp::kern
