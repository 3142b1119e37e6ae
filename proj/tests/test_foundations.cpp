#include <cmath>
#include <random>

#include "doctest.h"
#include "niflab/aa_kernel.hpp"
#include "niflab/profile.hpp"
#include "niflab/scaled.hpp"

using namespace niflab;

TEST_CASE("scaled arithmetic round trips and exact exponent handling") {
  Scaled a(3.25);
  Scaled b(-0.125);
  CHECK((a * b).to_double() == doctest::Approx(-0.40625).epsilon(1e-15));
  CHECK((a + b).to_double() == doctest::Approx(3.125).epsilon(1e-15));
  CHECK((a / b).to_double() == doctest::Approx(-26.0).epsilon(1e-15));

  // exact powers of two survive huge exponents
  Scaled big = Scaled::from_log2(300.0);
  Scaled prod = a * big;
  CHECK(prod.log2_abs() == doctest::Approx(std::log2(3.25) + 300.0).epsilon(1e-14));
  Scaled back = prod * Scaled::from_log2(-300.0);
  CHECK(back.to_double() == doctest::Approx(3.25).epsilon(1e-14));

  // additions align exponents
  Scaled s = Scaled::from_log2(100.0) + Scaled::from_log2(100.0);
  CHECK(s.log2_abs() == doctest::Approx(101.0).epsilon(1e-14));

  Scaled tiny = Scaled::from_log2(-400.0);
  Scaled sum = Scaled::one() + tiny;  // below rounding, dropped
  CHECK(sum.to_double() == doctest::Approx(1.0));

  CHECK(Scaled::zero().is_zero());
  CHECK((a - a).is_zero());

  Scaled c(std::complex<double>(1.0, 2.0), 10);
  CHECK(c.conj().to_complex().imag() == doctest::Approx(-2048.0));
  CHECK(c.pow_int(2).to_complex().real() == doctest::Approx((1.0 - 4.0) * 1024.0 * 1024.0));
}

TEST_CASE("dyadic profile: support, nonnegativity, partition of unity") {
  DyadicProfile prof = make_dyadic_profile();

  CHECK(prof.phi(3.0) == 0.0);          // outside 8/3
  CHECK(prof.phi(0.74) == 0.0);         // inside 3/4
  CHECK(prof.phi(1.5) == doctest::Approx(1.0));  // plateau between 4/3 and 3/2

  // partition of unity across fourteen decades
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ud(-6.0, 6.0);
  double worst = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double r = std::pow(10.0, ud(rng));
    double s = 0.0;
    for (int j = -25; j <= 25; ++j) s += prof.phi(r * std::exp2(static_cast<double>(-j)));
    worst = std::max(worst, std::fabs(s - 1.0));
  }
  CHECK(worst <= 1e-8);

  // at most two consecutive blocks overlap: phi(xi) + phi(xi/2) == 1 on [3/4*2, 8/3]
  CHECK(prof.phi(1.5) + prof.phi(0.75) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(prof.phi(2.0) + prof.phi(1.0) == doctest::Approx(1.0).epsilon(1e-12));

  // nonnegative on a fine sweep
  for (int i = 0; i <= 2000; ++i) {
    double r = 0.7 + (2.7 - 0.7) * i / 2000.0;
    CHECK(prof.phi(r) >= -1e-15);
  }

  CHECK_THROWS(make_dyadic_profile("overshoot"));
  CHECK_THROWS(make_dyadic_profile("canonical", 100));
}

TEST_CASE("profile export/import is bit identical") {
  DyadicProfile prof = make_dyadic_profile();
  prof.export_table("/tmp/niflab_prof_test.bin");
  DyadicProfile back = DyadicProfile::import_table("/tmp/niflab_prof_test.bin");
  CHECK(back.table_hash() == prof.table_hash());
  CHECK(back.probe_scale() == prof.probe_scale());
  for (int i = 0; i <= 100; ++i) {
    double r = 0.7 + 2.0 * i / 100.0;
    CHECK(back.phi(r) == prof.phi(r));
  }
}

TEST_CASE("phi_at_scale matches direct evaluation at extreme exponents") {
  DyadicProfile prof = make_dyadic_profile();
  // r = 1.3 * 2^200 against block j = 200
  double direct = prof.phi(1.3);
  CHECK(prof.phi_at_scale(1.3, 200, 200) == doctest::Approx(direct).epsilon(1e-15));
  CHECK(prof.phi_at_scale(1.3, 200, 150) == 0.0);
  CHECK(prof.phi_at_scale(1.3, -300, -300) == doctest::Approx(direct).epsilon(1e-15));
}

TEST_CASE("aa kernel closed form against tau quadrature") {
  // spec values
  CHECK(aa_kernel(0.0, 1.0, 2.0, 1.0) == 0.0);
  CHECK(aa_kernel(0.5, 1.0, 1.0, 1.0) == doctest::Approx(0.3032653299).epsilon(1e-9));
  CHECK(aa_kernel(0.1, 1.0, 4.0, 1.0) == doctest::Approx(0.0781724573).epsilon(1e-9));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.0, 2.0), ux(0.0, 50.0), um(0.1, 4.0),
      ushell(-1e-7, 1e-7);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double t = ut(rng), x2 = ux(rng), mu = um(rng);
    double e2 = (i % 3 == 0) ? x2 * (1.0 + ushell(rng)) : ux(rng);
    double c = aa_kernel(t, x2, e2, mu);
    double q = aa_tau_quadrature(t, x2, e2, mu, 64);
    if (q != 0.0) worst = std::max(worst, std::fabs(c - q) / std::fabs(q));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("aa kernel: positivity, monotonicity in t, branch consistency") {
  // monotone growth holds in the regime mu t max(xi2,eta2) <= 1 where the
  // kernel is used; beyond it the exponentials win and the kernel decays
  for (double t : {1e-6, 1e-3, 0.01, 0.05}) {
    CHECK(aa_kernel(t, 0.5, 7.0, 1.3) > 0.0);
    CHECK(aa_kernel(2.0 * t, 0.5, 7.0, 1.3) > aa_kernel(t, 0.5, 7.0, 1.3));
  }
  CHECK(aa_kernel(10.0, 0.5, 7.0, 1.3) < aa_kernel(1.0, 0.5, 7.0, 1.3));
  // crossover shell: |x2-e2| mu t around 1e-6
  for (double d : {0.9e-6, 1.1e-6}) {
    double x2 = 1.0, mu = 1.0, t = 1.0;
    double e2 = x2 + d;
    double v = aa_kernel(t, x2, e2, mu);
    double q = aa_tau_quadrature(t, x2, e2, mu, 64);
    CHECK(std::fabs(v - q) / q <= 1e-10);
  }
}

TEST_CASE("aa scaled agrees with the double path and survives huge exponents") {
  CHECK(aa_scaled(0.1, 1.0, Scaled(4.0), 1.0).to_double() ==
        doctest::Approx(aa_kernel(0.1, 1.0, 4.0, 1.0)).epsilon(1e-13));

  // e2 = 2^{320}, t = 2^{-336}: mu t e2 = 2^{-16}
  Scaled e2 = Scaled::from_log2(320.0);
  double t = std::exp2(-336.0);
  Scaled v = aa_scaled(t, 1e-4, e2, 1.0);
  // A ~ t (1 - mu t e2 / 2)
  double expect_log2 = std::log2(t) + std::log2(1.0 - 0.5 * std::exp2(-16.0));
  CHECK(v.log2_abs() == doctest::Approx(expect_log2).epsilon(1e-10));

  // derivative matches finite differences in a double-friendly range
  double base = 30.0, dd = 1e-4;
  double fd = (aa_kernel(0.3, 2.0, base + dd, 1.1) - aa_kernel(0.3, 2.0, base - dd, 1.1)) /
              (2.0 * dd);
  CHECK(aa_de2_scaled(0.3, 2.0, Scaled(base), 1.1).to_double() ==
        doctest::Approx(fd).epsilon(1e-6));
}
