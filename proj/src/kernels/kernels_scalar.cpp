#include "ddfc/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace ddfc::kernels::scalar {

double admm_project(std::span<const double> s, std::span<double> z, std::span<double> y,
                    double rho, double radius, std::size_t block) {
  const std::size_t len = s.size();
  const double inv_rho = 1.0 / rho;
  double primal = 0.0;
  if (!std::isfinite(radius)) {
    for (std::size_t i = 0; i < len; ++i) {
      z[i] = s[i] + y[i] * inv_rho;
      const double r = s[i] - z[i];
      y[i] += rho * r;
      primal = std::max(primal, std::abs(r));
    }
    return primal;
  }
  if (block == 1) {
    for (std::size_t i = 0; i < len; ++i) {
      const double v = std::clamp(s[i] + y[i] * inv_rho, -radius, radius);
      z[i] = v;
      const double r = s[i] - v;
      y[i] += rho * r;
      primal = std::max(primal, std::abs(r));
    }
    return primal;
  }
  for (std::size_t k = 0; k + block <= len; k += block) {
    double sq = 0.0;
    for (std::size_t j = 0; j < block; ++j) {
      const double v = s[k + j] + y[k + j] * inv_rho;
      z[k + j] = v;
      sq += v * v;
    }
    const double nrm = std::sqrt(sq);
    const double scale = nrm > radius ? radius / nrm : 1.0;
    for (std::size_t j = 0; j < block; ++j) {
      z[k + j] *= scale;
      const double r = s[k + j] - z[k + j];
      y[k + j] += rho * r;
      primal = std::max(primal, std::abs(r));
    }
  }
  return primal;
}

void givens_apply(std::span<double> x, std::span<double> y, double c, double s) {
  const std::size_t len = x.size();
  for (std::size_t i = 0; i < len; ++i) {
    const double a = x[i];
    const double b = y[i];
    x[i] = c * a + s * b;
    y[i] = -s * a + c * b;
  }
}

double max_weighted_block_norm(std::span<const double> diff, std::span<const double> weight,
                               std::size_t block) {
  double out = 0.0;
  if (block == 1) {
    for (std::size_t i = 0; i < diff.size(); ++i) out = std::max(out, weight[i] * std::abs(diff[i]));
    return out;
  }
  for (std::size_t k = 0, w = 0; k + block <= diff.size(); k += block, ++w) {
    double sq = 0.0;
    for (std::size_t j = 0; j < block; ++j) sq += diff[k + j] * diff[k + j];
    out = std::max(out, weight[w] * std::sqrt(sq));
  }
  return out;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) out = std::max(out, std::abs(a[i] - b[i]));
  return out;
}

}  // namespace ddfc::kernels::scalar
