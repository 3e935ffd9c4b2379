#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "gaitlab/kernels.hpp"

namespace gaitlab::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(GAITLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable* initial_table() noexcept {
  const char* forced = std::getenv("GAITLAB_KERNEL");
  if (forced != nullptr && std::string(forced) == "scalar") return &scalar();
  if (const KernelTable* t = avx2()) return t;
  return &scalar();
}

std::atomic<const KernelTable*>& current() noexcept {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

#if !defined(GAITLAB_HAVE_AVX2)
namespace detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace detail
#endif

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  throw std::invalid_argument("unknown kernel '" + std::string(name) + "' (expected scalar or avx2)");
}

const KernelTable* avx2() noexcept {
  static const bool usable = cpu_has_avx2();
  return usable ? detail::avx2_table() : nullptr;
}

const KernelTable& active() noexcept { return *current().load(std::memory_order_acquire); }

void select(Isa isa) {
  if (isa == Isa::Scalar) {
    current().store(&scalar(), std::memory_order_release);
    return;
  }
  const KernelTable* t = avx2();
  if (t == nullptr) throw std::invalid_argument("avx2 kernels are not available on this build or CPU");
  current().store(t, std::memory_order_release);
}

}  // namespace gaitlab::kernels
