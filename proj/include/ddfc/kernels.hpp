#pragma once

// Data-parallel inner loops of the solver and the closed-loop verifier.
//
// Every kernel has a scalar reference implementation; vectorised variants
// (AVX2+FMA on x86-64, NEON on aarch64) are selected once at runtime from the
// CPU feature set. DDFC_SIMD=scalar|avx2|neon in the environment forces a
// particular table (falls back to scalar when the request is unsupported).

#include <cstddef>
#include <span>
#include <string_view>

namespace ddfc::kernels {

enum class Isa { Scalar, Avx2, Neon };

std::string_view to_string(Isa isa);

/// ADMM projection step on the stacked input plan.
///
/// For each block k of `block` entries: z_k = Proj_ball(s_k + y_k / rho),
/// y_k += rho * (s_k - z_k). Blocks of size 1 use the interval clamp.
/// Returns max_i |s_i - z_i| (primal residual, infinity norm).
/// A non-finite radius disables the projection.
using AdmmProjectFn = double (*)(std::span<const double> s, std::span<double> z,
                                 std::span<double> y, double rho, double radius,
                                 std::size_t block);

/// Plane rotation of two rows: (x, y) <- (c x + s y, -s x + c y).
using GivensApplyFn = void (*)(std::span<double> x, std::span<double> y, double c, double s);

/// max_k weight_k * ||diff_k||, diff split into blocks of `block` entries,
/// one weight per block.
using MaxWeightedBlockNormFn = double (*)(std::span<const double> diff,
                                          std::span<const double> weight, std::size_t block);

/// max_i |a_i - b_i|
using MaxAbsDiffFn = double (*)(std::span<const double> a, std::span<const double> b);

struct KernelTable {
  Isa isa;
  AdmmProjectFn admm_project;
  GivensApplyFn givens_apply;
  MaxWeightedBlockNormFn max_weighted_block_norm;
  MaxAbsDiffFn max_abs_diff;
};

/// Table chosen for this process (CPU detection + DDFC_SIMD override).
const KernelTable& active();

/// Table for a specific ISA, or nullptr when not compiled in or not supported
/// by the running CPU.
const KernelTable* table_for(Isa isa);

namespace scalar {
double admm_project(std::span<const double> s, std::span<double> z, std::span<double> y,
                    double rho, double radius, std::size_t block);
void givens_apply(std::span<double> x, std::span<double> y, double c, double s);
double max_weighted_block_norm(std::span<const double> diff, std::span<const double> weight,
                               std::size_t block);
double max_abs_diff(std::span<const double> a, std::span<const double> b);
}  // namespace scalar

}  // namespace ddfc::kernels
