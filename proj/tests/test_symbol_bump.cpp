#include <cmath>
#include <random>

#include "doctest.h"
#include "niflab/bump_sum.hpp"
#include "niflab/grid_field.hpp"

using namespace niflab;
using Sym = MultiplierSymbol;

TEST_CASE("symbol algebra: riesz identity, parity, homogeneity, constants") {
  // R1^2 + R2^2 + R3^2 == -1 pointwise
  SymbolPtr riesz2 = Sym::add(
      Sym::add(Sym::pow(Sym::riesz(1), 2), Sym::pow(Sym::riesz(2), 2)),
      Sym::pow(Sym::riesz(3), 2));
  auto c = riesz2->as_constant();
  REQUIRE(c.has_value());
  CHECK(c->real() == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(c->imag() == doctest::Approx(0.0));

  // divergence of the rotational data symbol vanishes identically
  std::array<SymbolPtr, 3> u0sym = {
      Sym::div(Sym::xi(2), Sym::abs_xi()),
      Sym::mul(Sym::constant(-1.0), Sym::div(Sym::xi(1), Sym::abs_xi())),
      Sym::constant(0.0)};
  SymbolPtr divsym = Sym::divergence_dot(u0sym);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ud(-3.0, 3.0);
  for (int i = 0; i < 10000; ++i) {
    std::array<double, 3> xi{ud(rng), ud(rng), ud(rng)};
    if (xi[0] == 0 && xi[1] == 0 && xi[2] == 0) continue;
    CHECK(std::abs(divsym->eval(xi)) <= 1e-14);  // zero up to last-ulp rounding
  }

  CHECK(Sym::leray_entry(1, 2)->homogeneity_degree().value() == doctest::Approx(0.0));
  CHECK(Sym::laplacian()->homogeneity_degree().value() == doctest::Approx(2.0));
  CHECK(Sym::riesz(1)->parity().value() == -1);
  CHECK(Sym::leray_entry(1, 1)->parity().value() == 1);

  // heat factor at t = 0 is the identity
  SymbolPtr h = Sym::with_heat(Sym::constant(2.5), 1.7);
  CHECK(h->eval({1.0, 0.5, 0.25}, 0.0).real() == doctest::Approx(2.5));
  CHECK(h->eval({1.0, 0.0, 0.0}, 1.0).real() ==
        doctest::Approx(2.5 * std::exp(-1.7)).epsilon(1e-12));

  // scaled evaluation agrees with the plain path at moderate frequencies
  ScaledVec3 sv = ScaledVec3::from_plain({0.3, -1.2, 0.8});
  SymbolPtr expr = Sym::div(Sym::mul(Sym::xi(1), Sym::xi(2)), Sym::pow(Sym::abs_xi(), 2));
  CHECK(expr->eval_scaled(sv).to_complex().real() ==
        doctest::Approx(expr->eval({0.3, -1.2, 0.8}).real()).epsilon(1e-14));

  // prefix serialization round trip
  std::string text = expr->to_prefix();
  SymbolPtr back = Sym::parse_prefix(text);
  CHECK(back->eval({0.4, 1.1, -0.2}) == expr->eval({0.4, 1.1, -0.2}));
}

TEST_CASE("apply_multiplier: composition and singular-support flagging") {
  BumpSum f = BumpSum::zero(1);
  BumpTerm t1;
  t1.center = {16.0, 0.0, 0.0};
  t1.coeff = Scaled(1.0);
  t1.sym = {Sym::constant(1.0)};
  BumpTerm t2 = t1;
  t2.center = {0.5, 0.0, 0.0};  // support ball contains the origin
  f.terms = {t1, t2};

  auto res = apply_multiplier(f, Sym::riesz(1), /*singular_at_origin=*/true);
  CHECK(res.field.terms.size() == 1);
  REQUIRE(res.quadrature_only.size() == 1);
  CHECK(res.quadrature_only[0] == 1);

  auto res2 = apply_multiplier(f, Sym::laplacian(), false);
  CHECK(res2.field.terms.size() == 2);
  std::array<double, 3> xi{16.5, 0.3, -0.1};
  auto v = res2.field.eval_spectrum(xi)[0];
  auto w = f.eval_spectrum(xi)[0] * Scaled(Sym::laplacian()->eval(xi));
  CHECK(v.to_complex().real() == doctest::Approx(w.to_complex().real()).epsilon(1e-13));
}

namespace {

BumpSum single_term(const std::array<double, 3>& center, Scaled coeff, SymbolPtr s) {
  BumpSum f = BumpSum::zero(1);
  BumpTerm t;
  t.center = center;
  t.coeff = coeff;
  t.sym = {s};
  f.terms = {t};
  return f;
}

BumpSum cosine_pair(double c, Scaled amp) {
  BumpSum f = BumpSum::zero(1);
  BumpTerm tp;
  tp.center = {c, 0.0, 0.0};
  tp.coeff = amp;
  tp.sym = {MultiplierSymbol::constant(1.0)};
  BumpTerm tm = tp;
  tm.center = {-c, 0.0, 0.0};
  f.terms = {tp, tm};
  return f;
}

}  // namespace

TEST_CASE("envelope norms: modulation invariance and homogeneity") {
  DyadicProfile prof = make_dyadic_profile();
  BumpSum a = single_term({16.0, 0.0, 0.0}, Scaled(1.0), Sym::constant(1.0));
  BumpSum b = single_term({16.0, 5.0, -3.0}, Scaled(1.0), Sym::constant(1.0));

  // p = inf norm of a single modulated bump does not depend on the center
  double na = envelope_lp_norm(a, 4, kInf).value.to_double();
  double nb = envelope_lp_norm(b, 4, kInf).value.to_double();
  CHECK(na == doctest::Approx(nb).epsilon(1e-9));
  CHECK(na > 0.0);

  // doubling the amplitude doubles every norm
  BumpSum a2 = a.scaled_by(Scaled(2.0));
  for (double p : {2.0, 6.0, kInf}) {
    double n1 = envelope_lp_norm(a, 4, p).value.to_double();
    double n2 = envelope_lp_norm(a2, 4, p).value.to_double();
    CHECK(n2 == doctest::Approx(2.0 * n1).epsilon(1e-12));
  }
}

TEST_CASE("conjugate pair L2 against the grid synthesis oracle") {
  BumpSum f = cosine_pair(8.0, Scaled(0.7));  // k = 3
  CHECK(f.conjugate_symmetric());

  EnvelopeNorm en = envelope_lp_norm(f, 3, 2.0);
  CHECK_FALSE(en.is_bound);

  GridField g = bump_to_grid(f, 256, 8.0);
  CHECK(g.conjugate_symmetric(1e-10));
  double grid_l2 = g.lp_norm(2.0);
  CHECK(en.value.to_double() == doctest::Approx(grid_l2).epsilon(1e-6));
}

TEST_CASE("bump besov norm: log-domain soundness at 2^300") {
  DyadicProfile prof = make_dyadic_profile();
  BumpSum f = cosine_pair(16.0, Scaled(1.0));
  BumpBesovResult base = besov_norm(f, prof, {0.5, 2.0, 1.0});
  BumpSum big = f.scaled_by(Scaled::from_log2(300.0));
  BumpBesovResult scaled = besov_norm(big, prof, {0.5, 2.0, 1.0});
  CHECK(scaled.value.log2_abs() - base.value.log2_abs() ==
        doctest::Approx(300.0).epsilon(1e-12));
}

TEST_CASE("bump serialization round trip") {
  BumpSum f = BumpSum::zero(3);
  BumpTerm t;
  t.center = {32.0, 0.0, 0.0};
  t.coeff = Scaled(std::complex<double>(-0.25, 0.125), 40);
  t.sym = {Sym::div(Sym::xi(2), Sym::abs_xi()),
           Sym::mul(Sym::constant(-1.0), Sym::div(Sym::xi(1), Sym::abs_xi())),
           Sym::constant(0.0)};
  f.terms = {t};
  std::string text = f.serialize();
  BumpSum back = BumpSum::deserialize(text);
  REQUIRE(back.terms.size() == 1);
  CHECK(back.ncomp == 3);
  CHECK(back.terms[0].center[0] == 32.0);
  std::array<double, 3> xi{32.4, 0.7, -0.2};
  for (int c = 0; c < 3; ++c) {
    auto v0 = f.eval_spectrum(xi)[c].to_complex();
    auto v1 = back.eval_spectrum(xi)[c].to_complex();
    CHECK(std::abs(v1 - v0) <= 1e-12 * std::max(1.0, std::abs(v0)));
  }
}
