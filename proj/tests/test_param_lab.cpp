#include <random>

#include "doctest.h"
#include "niflab/param_lab.hpp"

using namespace niflab;

TEST_CASE("lemma feasibility at the worked p = 12 preset") {
  ParamSet ps = preset_thm1(Exponent::of(12), 200);
  CHECK(ps.eps1 == mpq_class(1, 16));
  CHECK(ps.eps == mpq_class(1, 20));
  CHECK(ps.p0->three_over() == mpq_class(9, 32));  // p0 = 32/3 in (6, 12)
  CHECK(ps.p0->v > 6);
  CHECK(ps.p0->v < 12);
  mpq_class i3q = ps.q.three_over();
  CHECK(i3q > mpq_class(23, 32));          // 0.71875
  CHECK(i3q < mpq_class(29, 40));          // 0.725
  FeasibilityReport rep = check_lemma31(ps);
  CHECK(rep.feasible);
  for (const auto& c : rep.conditions) CHECK(c.slack > 0);

  // boundary violation: eps1 at half the gap exactly
  ParamSet bad = ps;
  bad.eps1 = mpq_class(1, 2) * (mpq_class(1, 2) - mpq_class(1, 4));
  CHECK_FALSE(check_lemma31(bad).feasible);

  // q = 6 fails the open interval
  ParamSet badq = ps;
  badq.q = Exponent::of(6);
  CHECK_FALSE(check_lemma31(badq).feasible);
}

TEST_CASE("lemma 4.1: binding branch, redundancy, strictness") {
  ParamSet ps = preset_thm2(12, 200);
  FeasibilityReport rep = check_lemma41(ps);
  CHECK(rep.feasible);
  CHECK(rep.binding_branch == 2);  // 3/4 - 3/(2p) + 2eps - 3eps1 binds at p = 12
  CHECK(rep.dropped_branches_redundant);

  ParamSet p24 = preset_thm2(24, 200);
  CHECK(p24.eps1 == mpq_class(7, 80));  // 2.1/24 canonicalized
  CHECK(p24.eps == mpq_class(1, 12));
  CHECK(p24.inflation_rate() == mpq_class(2, 10) / 24);
  CHECK(check_lemma41(p24).feasible);

  ParamSet eq = p24;
  eq.eps = eq.eps1;
  CHECK_FALSE(check_lemma41(eq).feasible);
}

TEST_CASE("remark equivalences are exact rational identities") {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> pnum(13, 2000);
  int done = 0;
  while (done < 50) {
    int num = pnum(rng);
    mpq_class p(num, 2);  // p in (6.5, 1000)
    ParamSet ps1 = preset_thm1(Exponent::of(p), 100 + (done % 7) * 10);
    for (const auto& line : remark_equivalences(ps1, Regime::THM1)) {
      CHECK(line.agree);
      CHECK(line.n_coeff == -line.rhs_slack);
      CHECK(line.n_coeff < 0);  // decays at the preset
    }
    ParamSet ps2 = preset_thm2(p, 120);
    for (const auto& line : remark_equivalences(ps2, Regime::THM2)) {
      CHECK(line.agree);
      CHECK(line.n_coeff < 0);
    }
    ++done;
  }

  // a deliberately flipped inequality must refuse to agree
  ParamSet ps = preset_thm1(Exponent::of(12), 100);
  auto lines = remark_equivalences(ps, Regime::THM1);
  EquivalenceLine flipped = lines[0];
  flipped.rhs_slack = -flipped.rhs_slack;
  CHECK(flipped.n_coeff != -flipped.rhs_slack);
}

TEST_CASE("derived scales and smallness warnings") {
  ParamSet ps = preset_thm1(Exponent::of(12), 200);
  DerivedScales d = derived_scales(ps);
  CHECK(d.cn_log2 == mpq_class(25, 2));  // 12.5
  CHECK(d.inflation_rate == mpq_class(1, 40));
  CHECK(d.n_over_cn == doctest::Approx(200.0 / std::exp2(12.5)).epsilon(1e-12));
  CHECK_FALSE(d.smallness_warning);

  ParamSet small = preset_thm1(Exponent::of(12), 100);
  CHECK(derived_scales(small).smallness_warning);  // N/C(N) ~ 1.3

  ParamSet e0 = ps;
  e0.eps = 0;
  CHECK(e0.t0_log2() == mpq_class(-2) * 200);
}

TEST_CASE("presets stay feasible across a p grid; derived invariants hold") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> pnum(7, 3000);
  for (int i = 0; i < 120; ++i) {
    mpq_class p(pnum(rng));
    if (p <= 6) continue;
    ParamSet t1 = preset_thm1(Exponent::of(p), 150);
    CHECK(check_lemma31(t1).feasible);
    CHECK(t1.inflation_rate() > 0);
    CHECK(t1.cn_log2() > 0);
    ParamSet t2 = preset_thm2(p, 150);
    CHECK(check_lemma41(t2).feasible);
    CHECK(t2.inflation_rate() > 0);
    CHECK(t2.cn_log2() > 0);
  }
  ParamSet t1inf = preset_thm1(Exponent::inf(), 150);
  CHECK(check_lemma31(t1inf).feasible);
  ParamSet app = preset_appendix(150);
  CHECK(check_for_regime(app, Regime::APPENDIX_A).feasible);
  CHECK_FALSE(check_lemma41(app).feasible);  // the undropped advection branch blocks p = inf
}

TEST_CASE("rational parsing handles decimals and fractions") {
  CHECK(parse_rational("2.1") == mpq_class(21, 10));
  CHECK(parse_rational("1/3") == mpq_class(1, 3));
  CHECK(parse_rational("0.125") == mpq_class(1, 8));
  CHECK(parse_rational("21/10") == parse_rational("2.1"));
  CHECK(rat_str(mpq_class(9, 32)) == "9/32");
}
