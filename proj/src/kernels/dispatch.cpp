#include <cstdlib>
#include <string>

#include "ddfc/kernels.hpp"

namespace ddfc::kernels {

#define DDFC_DECLARE_VARIANT(ns)                                                                   \
  namespace ns {                                                                                   \
  double admm_project(std::span<const double>, std::span<double>, std::span<double>, double,      \
                      double, std::size_t);                                                        \
  void givens_apply(std::span<double>, std::span<double>, double, double);                        \
  double max_weighted_block_norm(std::span<const double>, std::span<const double>, std::size_t);  \
  double max_abs_diff(std::span<const double>, std::span<const double>);                          \
  }

#if defined(DDFC_HAVE_AVX2)
DDFC_DECLARE_VARIANT(avx2)
#endif
#if defined(DDFC_HAVE_NEON)
DDFC_DECLARE_VARIANT(neon)
#endif

#undef DDFC_DECLARE_VARIANT

namespace {

constexpr KernelTable kScalar{Isa::Scalar, scalar::admm_project, scalar::givens_apply,
                              scalar::max_weighted_block_norm, scalar::max_abs_diff};
#if defined(DDFC_HAVE_AVX2)
constexpr KernelTable kAvx2{Isa::Avx2, avx2::admm_project, avx2::givens_apply,
                            avx2::max_weighted_block_norm, avx2::max_abs_diff};
#endif
#if defined(DDFC_HAVE_NEON)
constexpr KernelTable kNeon{Isa::Neon, neon::admm_project, neon::givens_apply,
                            neon::max_weighted_block_norm, neon::max_abs_diff};
#endif

bool cpu_has_avx2() {
#if defined(DDFC_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& detect() {
  const char* env = std::getenv("DDFC_SIMD");
  const std::string request = env ? env : "";
  if (request == "scalar") return kScalar;
  if (request == "avx2" || request.empty()) {
    if (const KernelTable* t = table_for(Isa::Avx2)) return *t;
  }
  if (request == "neon" || request.empty()) {
    if (const KernelTable* t = table_for(Isa::Neon)) return *t;
  }
  return kScalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return &kScalar;
    case Isa::Avx2:
#if defined(DDFC_HAVE_AVX2)
      if (cpu_has_avx2()) return &kAvx2;
#endif
      return nullptr;
    case Isa::Neon:
#if defined(DDFC_HAVE_NEON)
      return &kNeon;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

const KernelTable& active() {
  static const KernelTable& table = detect();
  return table;
}

}  // namespace ddfc::kernels
