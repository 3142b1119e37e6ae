#include "niflab/aa_kernel.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "niflab/quadrature.hpp"

namespace niflab {

namespace {
constexpr double kLog2e = 1.4426950408889634074;  // log2(e)

// e^{-v} for nonnegative v of any magnitude
Scaled exp_neg(const Scaled& v) {
  if (v.is_zero()) return Scaled::one();
  double lv = v.log2_abs();
  if (lv > 56.0) return Scaled::zero();  // e^{-2^56} is zero past any bookkeeping
  return Scaled::from_log2(-v.to_double() * kLog2e);
}

}  // namespace

double psi_stable(double z) {
  if (std::fabs(z) < 1e-6) return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0));
  return std::expm1(z) / z;
}

double psi_prime_stable(double z) {
  if (std::fabs(z) < 0.5) {
    // sum_{r>=1} r z^{r-1} / (r+1)!
    double term = 0.5, acc = 0.5;  // r = 1
    for (int r = 2; r <= 24; ++r) {
      term *= z * static_cast<double>(r) / (static_cast<double>(r - 1) * (r + 1));
      acc += term;
      if (std::fabs(term) < 1e-18 * std::fabs(acc)) break;
    }
    return acc;
  }
  return (std::expm1(z) * (z - 1.0) + z) / (z * z);
}

double psi_second_stable(double z) {
  if (std::fabs(z) < 0.5) {
    // sum_{r>=2} r(r-1) z^{r-2} / (r+1)!
    double term = 1.0 / 3.0, acc = 1.0 / 3.0;  // r = 2
    for (int r = 3; r <= 26; ++r) {
      term *= z * static_cast<double>(r) / (static_cast<double>(r - 2) * (r + 1));
      acc += term;
      if (std::fabs(term) < 1e-18 * std::fabs(acc)) break;
    }
    return acc;
  }
  return (std::expm1(z) * (z * z - 2.0 * z + 2.0) + z * z - 2.0 * z) / (z * z * z);
}

double aa_kernel(double t, double xi2, double eta2, double mu) {
  if (t < 0 || xi2 < 0 || eta2 < 0 || mu <= 0)
    throw std::invalid_argument("aa_kernel: need t,xi2,eta2 >= 0 and mu > 0");
  if (t == 0.0) return 0.0;
  double z = -mu * t * (eta2 - xi2);
  if (std::fabs(z) < 700.0) {
    // A = t e^{-mu t xi2} psi(z); psi takes the series branch below 1e-6
    return t * std::exp(-mu * t * xi2) * psi_stable(z);
  }
  // exponentials differ by hundreds of orders; the literal form cannot cancel
  return (std::exp(-mu * t * eta2) - std::exp(-mu * t * xi2)) / (mu * (xi2 - eta2));
}

double aa_tau_quadrature(double t, double xi2, double eta2, double mu, int n) {
  if (t == 0.0) return 0.0;
  const GLRule& gl = gl_rule(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double tau = 0.5 * t * (1.0 + gl.x[i]);
    acc += gl.w[i] * std::exp(-mu * (xi2 * (t - tau) + eta2 * tau));
  }
  return acc * 0.5 * t;
}

Scaled aa_scaled(double t, double xi2, const Scaled& eta2, double mu) {
  if (t == 0.0) return Scaled::zero();
  const double b = mu * t * xi2;
  Scaled z_s = Scaled(-mu * t) * (eta2 - Scaled(xi2));
  double zl = z_s.log2_abs();
  if (zl < 9.45) {  // |z| < ~700
    return Scaled(t) * exp_neg(Scaled(b)) * Scaled(psi_stable(z_s.to_double()));
  }
  Scaled Ea = exp_neg(Scaled(mu * t) * eta2);
  Scaled Eb = exp_neg(Scaled(b));
  return (Ea - Eb) / (Scaled(mu) * (Scaled(xi2) - eta2));
}

Scaled aa_de2_scaled(double t, double xi2, const Scaled& eta2, double mu) {
  if (t == 0.0) return Scaled::zero();
  const double b = mu * t * xi2;
  Scaled z_s = Scaled(-mu * t) * (eta2 - Scaled(xi2));
  double zl = z_s.log2_abs();
  Scaled front = exp_neg(Scaled(b)) * Scaled(-mu * t * t);
  if (zl < 9.45) {
    return front * Scaled(psi_prime_stable(z_s.to_double()));
  }
  // psi'(z) -> 1/z^2 as z -> -inf
  return front * (Scaled(1.0) / (z_s * z_s));
}

}  // namespace niflab
