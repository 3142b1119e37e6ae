#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

namespace niflab {

// Complex number carried as mant * 2^exp2 with an integer exponent, so that
// magnitudes like 2^{k(5/2-3/p)} at k ~ several hundred never leave the
// representable range.  The mantissa is kept normalized to 0.5 <= |mant| < 1
// (max-norm of the two parts); exponent arithmetic on powers of two is exact.
class Scaled {
 public:
  Scaled() : mant_(0.0, 0.0), exp2_(0) {}
  Scaled(double re) : Scaled(std::complex<double>(re, 0.0), 0) {}
  explicit Scaled(std::complex<double> m) : Scaled(m, 0) {}
  Scaled(std::complex<double> m, std::int64_t e) : mant_(m), exp2_(e) { normalize(); }

  static Scaled zero() { return Scaled(); }
  static Scaled one() { return Scaled(1.0); }

  // value = m * 2^e without constructing the (possibly overflowing) double
  static Scaled from_parts(std::complex<double> m, std::int64_t e) { return Scaled(m, e); }
  static Scaled from_log2(double log2_mag) {
    double ip = std::floor(log2_mag);
    return Scaled(std::complex<double>(std::exp2(log2_mag - ip), 0.0),
                  static_cast<std::int64_t>(ip));
  }

  bool is_zero() const { return mant_ == std::complex<double>(0.0, 0.0); }
  std::complex<double> mantissa() const { return mant_; }
  std::int64_t exponent2() const { return exp2_; }

  // log2 of |value|; -inf for zero
  double log2_abs() const {
    if (is_zero()) return -std::numeric_limits<double>::infinity();
    return static_cast<double>(exp2_) + std::log2(std::abs(mant_));
  }
  double arg() const { return std::arg(mant_); }

  // Convert to double, saturating to +-inf / 0 outside the double range.
  std::complex<double> to_complex() const {
    if (is_zero()) return {0.0, 0.0};
    if (exp2_ > 1020) {
      double s = std::numeric_limits<double>::infinity();
      return {mant_.real() == 0 ? 0.0 : s * sgn(mant_.real()),
              mant_.imag() == 0 ? 0.0 : s * sgn(mant_.imag())};
    }
    if (exp2_ < -1060) return {0.0, 0.0};
    double f = std::exp2(static_cast<double>(exp2_));
    return mant_ * f;
  }
  double to_double() const { return to_complex().real(); }

  Scaled& operator+=(const Scaled& o) {
    if (o.is_zero()) return *this;
    if (is_zero()) { *this = o; return *this; }
    std::int64_t d = exp2_ - o.exp2_;
    if (d >= 120) return *this;           // o is below rounding
    if (d <= -120) { *this = o; return *this; }
    if (d >= 0) {
      mant_ += o.mant_ * std::exp2(static_cast<double>(-d));
    } else {
      mant_ = mant_ * std::exp2(static_cast<double>(d)) + o.mant_;
      exp2_ = o.exp2_;
    }
    normalize();
    return *this;
  }
  Scaled& operator-=(const Scaled& o) { return *this += (-o); }
  Scaled& operator*=(const Scaled& o) {
    if (is_zero() || o.is_zero()) { *this = Scaled(); return *this; }
    mant_ *= o.mant_;
    exp2_ += o.exp2_;
    normalize();
    return *this;
  }
  Scaled& operator/=(const Scaled& o) {
    mant_ /= o.mant_;
    exp2_ -= o.exp2_;
    normalize();
    return *this;
  }

  Scaled operator-() const {
    Scaled r = *this;
    r.mant_ = -r.mant_;
    return r;
  }

  friend Scaled operator+(Scaled a, const Scaled& b) { return a += b; }
  friend Scaled operator-(Scaled a, const Scaled& b) { return a -= b; }
  friend Scaled operator*(Scaled a, const Scaled& b) { return a *= b; }
  friend Scaled operator/(Scaled a, const Scaled& b) { return a /= b; }

  friend Scaled operator*(Scaled a, double b) { return a *= Scaled(b); }
  friend Scaled operator*(double a, Scaled b) { return b *= Scaled(a); }

  Scaled& mul_pow2(std::int64_t e) {
    if (!is_zero()) exp2_ += e;
    return *this;
  }

  Scaled abs() const { return Scaled(std::complex<double>(std::abs(mant_), 0.0), exp2_); }
  Scaled conj() const { return Scaled(std::conj(mant_), exp2_); }
  Scaled real_part() const { return Scaled(std::complex<double>(mant_.real(), 0.0), exp2_); }

  // |a| compared against |b|
  bool abs_less(const Scaled& o) const { return log2_abs() < o.log2_abs(); }

  // exact power of an integer exponent
  Scaled pow_int(int n) const {
    Scaled r = one();
    Scaled b = *this;
    int m = n < 0 ? -n : n;
    while (m) {
      if (m & 1) r *= b;
      b *= b;
      m >>= 1;
    }
    if (n < 0) return one() / r;
    return r;
  }

 private:
  static double sgn(double x) { return x < 0 ? -1.0 : 1.0; }
  void normalize() {
    double a = std::max(std::fabs(mant_.real()), std::fabs(mant_.imag()));
    if (a == 0.0 || std::isnan(a)) {
      if (!std::isnan(a)) { mant_ = {0.0, 0.0}; exp2_ = 0; }
      return;
    }
    int e;
    std::frexp(a, &e);  // a = f * 2^e, f in [0.5, 1)
    if (e != 0) {
      mant_ *= std::exp2(static_cast<double>(-e));
      exp2_ += e;
    }
  }

  std::complex<double> mant_;
  std::int64_t exp2_;
};

}  // namespace niflab
