#include <cmath>
#include <random>

#include "doctest.h"
#include "niflab/fft3.hpp"
#include "niflab/initial_data.hpp"

using namespace niflab;
using Sym = MultiplierSymbol;

TEST_CASE("build_data: term counts, amplitudes, rejection") {
  ParamSet ps = preset_thm1(Exponent::of(12), 6, 6);  // N = k0 = 6
  DataFamily fam = build_data(ps, Regime::THM1);
  CHECK(fam.a0.terms.size() == 2);
  CHECK(fam.u0.terms.size() == 2);
  double expect = -6.0 * 0.25 - rat_d(ps.cn_log2());  // 2^{-k 3/p}/C(N)
  CHECK(fam.a0.terms[0].coeff.log2_abs() == doctest::Approx(expect).epsilon(1e-12));

  ParamSet bad = ps;
  bad.q = Exponent::of(6);
  CHECK_THROWS_WITH_AS(build_data(bad, Regime::THM1), doctest::Contains("violated"),
                       std::invalid_argument);
  CHECK_FALSE(check_lemma31(bad).conditions[7].pass);  // q < 6 has zero slack

  ParamSet ps2 = preset_thm1(Exponent::of(12), 12, 5);
  DataFamily fam2 = build_data(ps2, Regime::THM1);
  CHECK(fam2.a0.terms.size() == 2 * (12 - 5 + 1));
  CHECK(fam2.a0.conjugate_symmetric());
  CHECK(fam2.u0.conjugate_symmetric());
}

TEST_CASE("divergence-free: symbol identity at 1e4 random points") {
  ParamSet ps = preset_thm1(Exponent::of(12), 8, 5);
  DataFamily fam = build_data(ps, Regime::THM1);
  std::array<SymbolPtr, 3> syms = {fam.u0.terms[0].sym[0], fam.u0.terms[0].sym[1],
                                   fam.u0.terms[0].sym[2]};
  SymbolPtr div = Sym::divergence_dot(syms);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ud(-40.0, 40.0);
  for (int i = 0; i < 10000; ++i) {
    std::array<double, 3> xi{ud(rng), ud(rng), ud(rng)};
    if (xi[0] == 0 && xi[1] == 0 && xi[2] == 0) continue;
    CHECK(std::abs(div->eval(xi)) <= 1e-14);
  }
}

TEST_CASE("spatial form of u0 matches the Riesz-transform construction") {
  // The spectral definition synthesizes, up to a global sign, to
  // (2/C) sum_k 2^{k/2} { R2(phi sin(2^k x1)), -R1(phi sin(2^k x1)), 0 };
  // the construction is fixed by the spectral side, which the probe
  // functionals consume.
  ParamSet ps = preset_thm1(Exponent::of(12), 4, 3);
  ps.k0 = 3;
  ps.N = 4;
  DataFamily fam = build_data(ps, Regime::THM1);

  const int M = 128;
  const double L = 2.0;
  GridField u_bump = bump_to_grid(fam.u0, M, L);

  // reference path: phi sampled from the plain bump, modulated, Riesz applied
  BumpSum phi0 = BumpSum::zero(1);
  {
    BumpTerm t;
    t.center = {0.0, 0.0, 0.0};
    t.coeff = Scaled(1.0);
    t.sym = {Sym::constant(1.0)};
    phi0.terms = {t};
  }
  GridField phig = bump_to_grid(phi0, M, L);
  GridField ref(M, L, 3);
  for (int k = ps.k0; k <= ps.N; ++k) {
    double amp = 2.0 * std::exp2(k * 0.5 - rat_d(ps.cn_log2()));
    int shift = static_cast<int>(std::exp2(static_cast<double>(k)) * L);
    // spectral modulation: phi_hat(xi -+ 2^k e1) / (2i) difference
    GridField mod(M, L, 1);
    for (int ix = 0; ix < M; ++ix)
      for (int iy = 0; iy < M; ++iy)
        for (int iz = 0; iz < M; ++iz) {
          auto v = phig.at(0, ix, iy, iz);
          if (v == std::complex<double>(0.0, 0.0)) continue;
          int n1 = phig.freq_of(ix);
          std::complex<double> him(0.0, -0.5);  // 1/(2i)
          int up = n1 + shift, dn = n1 - shift;
          if (std::abs(up) <= M / 2 - 1)
            mod.at(0, mod.index_of_freq(up), iy, iz) += v * him;
          if (std::abs(dn) <= M / 2 - 1)
            mod.at(0, mod.index_of_freq(dn), iy, iz) -= v * him;
        }
    GridField r2 = mod.apply_multiplier([&](const std::array<double, 3>& xi) {
      double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
      return std::complex<double>(0.0, -xi[1] / r);
    });
    GridField r1 = mod.apply_multiplier([&](const std::array<double, 3>& xi) {
      double r = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
      return std::complex<double>(0.0, -xi[0] / r);
    });
    for (std::size_t i = 0; i < ref.size3(); ++i) {
      ref.spectrum(0)[i] += amp * r2.spectrum(0)[i];
      ref.spectrum(1)[i] += -amp * r1.spectrum(0)[i];
    }
  }

  double scale = u_bump.lp_norm(2.0);
  double err = (u_bump - ref).lp_norm(2.0);
  CHECK(err / scale <= 1e-6);

  // realness of the synthesized field
  auto phys = u_bump.to_phys(0);
  double worst = 0.0, peak = 0.0;
  for (const auto& z : phys) {
    worst = std::max(worst, std::fabs(z.imag()));
    peak = std::max(peak, std::fabs(z.real()));
  }
  CHECK(worst <= 1e-10 * peak);
}

TEST_CASE("certificates: homogeneity and predictor ratios") {
  ParamSet ps = preset_thm1(Exponent::of(12), 24, 20);
  DataFamily fam = build_data(ps, Regime::THM1);
  NormCertificate cert = certify_norms(fam);

  // all three certified norms present with finite ratios
  CHECK(cert.entries.size() == 3);
  for (const auto& e : cert.entries) {
    CHECK(std::isfinite(e.ratio));
    CHECK(e.ratio > 0.0);
  }

  // scaling both amplitudes by 2 doubles every measured norm
  DataFamily fam2 = fam;
  fam2.a0 = fam.a0.scaled_by(Scaled(2.0));
  fam2.u0 = fam.u0.scaled_by(Scaled(2.0));
  NormCertificate cert2 = certify_norms(fam2);
  for (std::size_t i = 0; i < cert.entries.size(); ++i)
    CHECK(cert2.entries[i].measured_log2 - cert.entries[i].measured_log2 ==
          doctest::Approx(1.0).epsilon(1e-9));

  // a0 L-infinity is exact for the aligned cosine family
  CHECK_FALSE(cert.by_name("a0_linf").is_bound);
}

TEST_CASE("a0 L-infinity against the periodized grid maximum") {
  ParamSet ps = preset_thm1(Exponent::of(12), 5, 4);
  DataFamily fam = build_data(ps, Regime::THM1);
  SupremumNorm sup = linf_norm_aligned(fam.a0);
  CHECK(sup.exact);

  GridField g = bump_to_grid(fam.a0, 128, 1.0);
  auto phys = g.to_phys(0);
  double gmax = 0.0;
  for (const auto& z : phys) gmax = std::max(gmax, std::fabs(z.real()));
  CHECK(sup.value.to_double() == doctest::Approx(gmax).epsilon(0.02));
}

TEST_CASE("direction constant: isotropic average is 2/3, concentration kills it") {
  DyadicProfile prof = make_dyadic_profile();
  auto flat = [](const std::array<double, 3>&) { return 1.0; };
  CHECK(direction_constant(prof, flat) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));
  CHECK(direction_constant(prof, flat, true) == doctest::Approx(2.0 / 3.0).epsilon(1e-8));

  // weight concentrated near the xi2 axis (xi1 = xi3 = 0) pushes A_eff to 0
  auto axis = [](const std::array<double, 3>& xi) {
    double r2 = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    double c2 = xi[1] * xi[1] / r2;
    return std::pow(c2, 40.0);
  };
  CHECK(direction_constant(prof, axis) < 0.05);
  CHECK(direction_constant(prof, axis) > 0.0);
}

TEST_CASE("certificate ratios stay within spread 2 across N (small-k family)") {
  double lo = kInf, hi = 0.0;
  for (int N : {20, 35, 50}) {
    ParamSet ps = preset_thm1(Exponent::of(12), N, 4);
    DataFamily fam = build_data(ps, Regime::THM1);
    NormCertificate cert = certify_norms(fam);
    double r = cert.by_name("a0_besov").ratio;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  CHECK(hi / lo <= 2.0);
}
