#include "ddfc/kernels.hpp"

#include <arm_neon.h>

#include <algorithm>
#include <cmath>

namespace ddfc::kernels::neon {

double admm_project(std::span<const double> s, std::span<double> z, std::span<double> y,
                    double rho, double radius, std::size_t block) {
  if (block != 1 || !std::isfinite(radius)) return scalar::admm_project(s, z, y, rho, radius, block);

  const std::size_t len = s.size();
  const float64x2_t vinv = vdupq_n_f64(1.0 / rho);
  const float64x2_t vrho = vdupq_n_f64(rho);
  const float64x2_t vhi = vdupq_n_f64(radius);
  const float64x2_t vlo = vdupq_n_f64(-radius);
  float64x2_t vmax = vdupq_n_f64(0.0);

  std::size_t i = 0;
  for (; i + 2 <= len; i += 2) {
    const float64x2_t vs = vld1q_f64(s.data() + i);
    float64x2_t vy = vld1q_f64(y.data() + i);
    const float64x2_t cand = vaddq_f64(vs, vmulq_f64(vy, vinv));
    const float64x2_t vz = vminq_f64(vmaxq_f64(cand, vlo), vhi);
    const float64x2_t r = vsubq_f64(vs, vz);
    vy = vaddq_f64(vy, vmulq_f64(vrho, r));
    vst1q_f64(z.data() + i, vz);
    vst1q_f64(y.data() + i, vy);
    vmax = vmaxq_f64(vmax, vabsq_f64(r));
  }
  double primal = vmaxvq_f64(vmax);
  if (i < len) {
    primal = std::max(primal, scalar::admm_project(s.subspan(i), z.subspan(i), y.subspan(i), rho,
                                                   radius, block));
  }
  return primal;
}

void givens_apply(std::span<double> x, std::span<double> y, double c, double s) {
  const std::size_t len = x.size();
  const float64x2_t vc = vdupq_n_f64(c);
  const float64x2_t vs = vdupq_n_f64(s);
  std::size_t i = 0;
  for (; i + 2 <= len; i += 2) {
    const float64x2_t a = vld1q_f64(x.data() + i);
    const float64x2_t b = vld1q_f64(y.data() + i);
    vst1q_f64(x.data() + i, vfmaq_f64(vmulq_f64(vs, b), vc, a));
    vst1q_f64(y.data() + i, vfmsq_f64(vmulq_f64(vc, b), vs, a));
  }
  if (i < len) scalar::givens_apply(x.subspan(i), y.subspan(i), c, s);
}

double max_weighted_block_norm(std::span<const double> diff, std::span<const double> weight,
                               std::size_t block) {
  if (block != 1) return scalar::max_weighted_block_norm(diff, weight, block);
  float64x2_t vmax = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= diff.size(); i += 2) {
    const float64x2_t d = vabsq_f64(vld1q_f64(diff.data() + i));
    vmax = vmaxq_f64(vmax, vmulq_f64(vld1q_f64(weight.data() + i), d));
  }
  double out = vmaxvq_f64(vmax);
  if (i < diff.size()) {
    out = std::max(out, scalar::max_weighted_block_norm(diff.subspan(i), weight.subspan(i), 1));
  }
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  float64x2_t vmax = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= a.size(); i += 2) {
    vmax = vmaxq_f64(vmax, vabdq_f64(vld1q_f64(a.data() + i), vld1q_f64(b.data() + i)));
  }
  double out = vmaxvq_f64(vmax);
  if (i < a.size()) out = std::max(out, scalar::max_abs_diff(a.subspan(i), b.subspan(i)));
  return out;
}

}  // namespace ddfc::kernels::neon
