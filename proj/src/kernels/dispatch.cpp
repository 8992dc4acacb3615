#include <cstdlib>
#include <string_view>

#include "did/kernels.hpp"

namespace did::kernels {
namespace detail {
const KernelTable* avx2_table_impl() noexcept;
}

namespace {

bool cpu_has_avx2() noexcept {
#if defined(DID_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& select() noexcept {
  const char* env = std::getenv("DID_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return scalar_table();
  if (const KernelTable* t = avx2_table()) return *t;
  return scalar_table();
}

}  // namespace

const KernelTable* avx2_table() noexcept {
  static const KernelTable* table = cpu_has_avx2() ? detail::avx2_table_impl() : nullptr;
  return table;
}

const KernelTable& active() noexcept {
  static const KernelTable& table = select();
  return table;
}

}  // namespace did::kernels
