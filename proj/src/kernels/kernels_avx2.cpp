// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include "ddfc/kernels.hpp"

#include <immintrin.h>

#include <algorithm>
#include <cmath>

namespace ddfc::kernels::avx2 {

namespace {

inline double hmax(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_max_pd(lo, hi);
  hi = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_max_sd(lo, hi));
}

inline __m256d vabs(__m256d v) {
  const __m256d sign = _mm256_set1_pd(-0.0);
  return _mm256_andnot_pd(sign, v);
}

}  // namespace

double admm_project(std::span<const double> s, std::span<double> z, std::span<double> y,
                    double rho, double radius, std::size_t block) {
  if (block != 1 || !std::isfinite(radius)) return scalar::admm_project(s, z, y, rho, radius, block);

  const std::size_t len = s.size();
  const double inv_rho = 1.0 / rho;
  const __m256d vinv = _mm256_set1_pd(inv_rho);
  const __m256d vrho = _mm256_set1_pd(rho);
  const __m256d vhi = _mm256_set1_pd(radius);
  const __m256d vlo = _mm256_set1_pd(-radius);
  __m256d vmax = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d vs = _mm256_loadu_pd(s.data() + i);
    __m256d vy = _mm256_loadu_pd(y.data() + i);
    // s + y / rho, same rounding as the scalar path (no fused multiply-add)
    const __m256d cand = _mm256_add_pd(vs, _mm256_mul_pd(vy, vinv));
    const __m256d vz = _mm256_min_pd(_mm256_max_pd(cand, vlo), vhi);
    const __m256d r = _mm256_sub_pd(vs, vz);
    vy = _mm256_add_pd(vy, _mm256_mul_pd(vrho, r));
    _mm256_storeu_pd(z.data() + i, vz);
    _mm256_storeu_pd(y.data() + i, vy);
    vmax = _mm256_max_pd(vmax, vabs(r));
  }
  double primal = hmax(vmax);
  if (i < len) {
    primal = std::max(primal, scalar::admm_project(s.subspan(i), z.subspan(i), y.subspan(i), rho,
                                                   radius, block));
  }
  return primal;
}

void givens_apply(std::span<double> x, std::span<double> y, double c, double s) {
  const std::size_t len = x.size();
  const __m256d vc = _mm256_set1_pd(c);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d a = _mm256_loadu_pd(x.data() + i);
    const __m256d b = _mm256_loadu_pd(y.data() + i);
    const __m256d nx = _mm256_fmadd_pd(vc, a, _mm256_mul_pd(vs, b));
    const __m256d ny = _mm256_fmsub_pd(vc, b, _mm256_mul_pd(vs, a));
    _mm256_storeu_pd(x.data() + i, nx);
    _mm256_storeu_pd(y.data() + i, ny);
  }
  if (i < len) scalar::givens_apply(x.subspan(i), y.subspan(i), c, s);
}

double max_weighted_block_norm(std::span<const double> diff, std::span<const double> weight,
                               std::size_t block) {
  if (block != 1) return scalar::max_weighted_block_norm(diff, weight, block);
  const std::size_t len = diff.size();
  __m256d vmax = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d d = vabs(_mm256_loadu_pd(diff.data() + i));
    const __m256d w = _mm256_loadu_pd(weight.data() + i);
    vmax = _mm256_max_pd(vmax, _mm256_mul_pd(w, d));
  }
  double out = hmax(vmax);
  if (i < len) {
    out = std::max(out, scalar::max_weighted_block_norm(diff.subspan(i), weight.subspan(i), 1));
  }
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  const std::size_t len = a.size();
  __m256d vmax = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a.data() + i), _mm256_loadu_pd(b.data() + i));
    vmax = _mm256_max_pd(vmax, vabs(d));
  }
  double out = hmax(vmax);
  if (i < len) out = std::max(out, scalar::max_abs_diff(a.subspan(i), b.subspan(i)));
  return out;
}

}  // namespace ddfc::kernels::avx2
