#include "niflab/param_lab.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace niflab {

std::string Exponent::str() const { return is_inf ? "inf" : rat_str(v); }

std::string regime_name(Regime r) {
  switch (r) {
    case Regime::THM1: return "thm1";
    case Regime::THM2: return "thm2";
    case Regime::APPENDIX_A: return "appendix_a";
  }
  return "?";
}

Regime regime_from_name(const std::string& s) {
  if (s == "thm1") return Regime::THM1;
  if (s == "thm2") return Regime::THM2;
  if (s == "appendix_a" || s == "appendix") return Regime::APPENDIX_A;
  throw std::invalid_argument("unknown regime: " + s);
}

mpq_class ParamSet::cn_log2() const {
  return mpq_class(N) / 2 * (mpq_class(1, 2) - p.three_over() - 2 * eps1);
}

mpq_class ParamSet::t0_log2() const { return mpq_class(-2) * (1 + eps) * N; }

mpq_class ParamSet::inflation_rate() const { return 2 * (eps1 - eps); }

double ParamSet::n_over_cn() const { return N * std::exp2(-rat_d(cn_log2())); }
double ParamSet::t0() const { return std::exp2(rat_d(t0_log2())); }
double ParamSet::cn() const { return std::exp2(rat_d(cn_log2())); }

std::string ParamSet::describe() const {
  std::ostringstream os;
  os << regime_name(regime) << " p=" << p.str() << " q=" << q.str();
  if (p0) os << " p0=" << p0->str();
  os << " eps=" << rat_str(eps) << " eps1=" << rat_str(eps1) << " N=" << N << " k0=" << k0
     << " mu=" << mu;
  return os.str();
}

namespace {

void push(std::vector<Condition>& v, const std::string& name, const mpq_class& slack) {
  v.push_back({name, slack, slack > 0});
}

}  // namespace

std::string FeasibilityReport::summary() const {
  std::ostringstream os;
  for (const auto& c : conditions)
    os << (c.pass ? "  ok   " : "  FAIL ") << c.name << "  slack=" << rat_str(c.slack) << "\n";
  os << (feasible ? "feasible" : "infeasible");
  return os.str();
}

FeasibilityReport check_lemma31(const ParamSet& ps) {
  if (!ps.p0) throw std::invalid_argument("check_lemma31: parameter set lacks p0");
  mpq_class i3p = ps.p.three_over();
  mpq_class i3q = ps.q.three_over();
  mpq_class i3p0 = ps.p0->three_over();
  const mpq_class half(1, 2);

  FeasibilityReport rep;
  auto& C = rep.conditions;
  push(C, "3/q + 3/p0 > 1", i3q + i3p0 - 1);
  push(C, "3/q + 3/p0 < 5/4 + 3/(2p) - 3/p0 + 2eps - 3eps1",
       mpq_class(5, 4) + i3p / 2 - i3p0 + 2 * ps.eps - 3 * ps.eps1 - (i3q + i3p0));
  push(C, "3/p0 < 1/4 + 3/(2p) - eps1", mpq_class(1, 4) + i3p / 2 - ps.eps1 - i3p0);
  push(C, "p0 > 6", half - i3p0);
  push(C, "p0 < p", i3p0 - i3p);
  push(C, "3/q < 1 + 3eps - 2eps1", 1 + 3 * ps.eps - 2 * ps.eps1 - i3q);
  push(C, "q > 3", 1 - i3q);
  push(C, "q < 6", i3q - half);
  push(C, "eps > 0", ps.eps);
  push(C, "eps < eps1", ps.eps1 - ps.eps);
  push(C, "2eps1 < 1/2 - 3/p", half - i3p - 2 * ps.eps1);

  rep.feasible = true;
  for (const auto& c : C) rep.feasible = rep.feasible && c.pass;
  return rep;
}

namespace {

FeasibilityReport lemma41_impl(const ParamSet& ps, bool drop_advection_branch) {
  mpq_class i3p = ps.p.three_over();
  mpq_class i3q = ps.q.three_over();
  const mpq_class half(1, 2);

  mpq_class branches[4] = {
      1 + 2 * ps.eps - 2 * ps.eps1,
      mpq_class(3, 4) + mpq_class(9, 2) * (ps.p.is_inf ? mpq_class(0) : mpq_class(1) / ps.p.v) +
          2 * ps.eps - ps.eps1,
      mpq_class(3, 4) - i3p / 2 + 2 * ps.eps - 3 * ps.eps1,
      half + i3p + 2 * ps.eps - 2 * ps.eps1,
  };
  static const char* names[4] = {
      "3/q < 1 + 2eps - 2eps1",
      "3/q < 3/4 + 9/(2p) + 2eps - eps1",
      "3/q < 3/4 - 3/(2p) + 2eps - 3eps1",
      "3/q < 1/2 + 3/p + 2eps - 2eps1",
  };

  FeasibilityReport rep;
  auto& C = rep.conditions;
  mpq_class best;
  int nb = drop_advection_branch ? 3 : 4;
  for (int i = 0; i < nb; ++i) {
    push(C, names[i], branches[i] - i3q);
    if (rep.binding_branch < 0 || branches[i] < best) {
      best = branches[i];
      rep.binding_branch = i;
    }
  }
  rep.dropped_branches_redundant =
      std::min(branches[0], branches[1]) >= std::min(branches[2], branches[3]);
  push(C, "q > 3", 1 - i3q);
  push(C, "q < 6", i3q - half);
  push(C, "eps > 0", ps.eps);
  push(C, "eps < eps1", ps.eps1 - ps.eps);
  push(C, "2eps1 < 1/2 - 3/p", half - i3p - 2 * ps.eps1);

  rep.feasible = true;
  for (const auto& c : C) rep.feasible = rep.feasible && c.pass;
  return rep;
}

}  // namespace

FeasibilityReport check_lemma41(const ParamSet& ps) { return lemma41_impl(ps, false); }

FeasibilityReport check_for_regime(const ParamSet& ps, Regime regime) {
  switch (regime) {
    case Regime::THM1: return check_lemma31(ps);
    case Regime::THM2: return check_lemma41(ps);
    case Regime::APPENDIX_A: return lemma41_impl(ps, true);
  }
  throw std::logic_error("check_for_regime: bad regime");
}

namespace {

struct EqSpec {
  const char* lhs;
  mpq_class t_pow;      // power of T in the quantity
  mpq_class n_exp;      // N-linear exponent of the 2^{N(...)} factor
  int c_pow;            // power of C(N) in the denominator
  mpq_class rhs_slack;  // RHS - LHS of the stated inequality
};

}  // namespace

std::vector<EquivalenceLine> remark_equivalences(const ParamSet& ps, Regime regime) {
  mpq_class i3p = ps.p.three_over();
  mpq_class i3q = ps.q.three_over();
  mpq_class i3p0 = ps.p0 ? ps.p0->three_over() : mpq_class(0);
  const mpq_class half(1, 2);

  std::vector<EqSpec> specs;
  if (regime == Regime::THM1) {
    if (!ps.p0) throw std::invalid_argument("remark_equivalences: THM1 needs p0");
    specs.push_back({"2^{N(3/p0-3/p)}/C(N)", 0, i3p0 - i3p, 1,
                     mpq_class(1, 4) + i3p / 2 - ps.eps1 - i3p0});
    specs.push_back({"T^{3/2} 2^{N(3/q-3/p+5/2)}/C(N)^2", mpq_class(3, 2),
                     i3q - i3p + mpq_class(5, 2), 2, 1 + 3 * ps.eps - 2 * ps.eps1 - i3q});
    specs.push_back({"T 2^{N(3/q+6/p0-6/p+3/2)}/C(N)^3", 1,
                     i3q + 2 * i3p0 - 2 * i3p + mpq_class(3, 2), 3,
                     mpq_class(5, 4) + i3p / 2 - i3p0 + 2 * ps.eps - 3 * ps.eps1 -
                         (i3q + i3p0)});
  } else {
    specs.push_back({"T 2^{N(3/q-3/p+3/2)}/C(N)^2", 1, i3q - i3p + mpq_class(3, 2), 2,
                     1 + 2 * ps.eps - 2 * ps.eps1 - i3q});
    specs.push_back(
        {"T 2^{N(3/q-6/p+3/2)}/C(N)", 1, i3q - 2 * i3p + mpq_class(3, 2), 1,
         mpq_class(3, 4) +
             mpq_class(9, 2) * (ps.p.is_inf ? mpq_class(0) : mpq_class(1) / ps.p.v) +
             2 * ps.eps - ps.eps1 - i3q});
    specs.push_back({"T 2^{N(3/q-3/p+2)}/C(N)^3", 1, i3q - i3p + 2, 3,
                     mpq_class(3, 4) - i3p / 2 + 2 * ps.eps - 3 * ps.eps1 - i3q});
    specs.push_back({"T 2^{N(3/q-6/p+2)}/C(N)^2", 1, i3q - 2 * i3p + 2, 2,
                     half + i3p + 2 * ps.eps - 2 * ps.eps1 - i3q});
  }

  const mpq_class t_rate = mpq_class(-2) * (1 + ps.eps);             // log2 T0 per N
  const mpq_class c_rate = half * (half - i3p - 2 * ps.eps1);        // log2 C(N) per N

  std::vector<EquivalenceLine> out;
  for (const auto& s : specs) {
    EquivalenceLine line;
    line.lhs = s.lhs;
    line.n_coeff = s.t_pow * t_rate + s.n_exp - s.c_pow * c_rate;
    line.rhs_slack = s.rhs_slack;
    line.agree = (line.n_coeff == -s.rhs_slack);
    out.push_back(std::move(line));
  }
  return out;
}

DerivedScales derived_scales(const ParamSet& ps) {
  DerivedScales d;
  d.cn_log2 = ps.cn_log2();
  d.t0_log2 = ps.t0_log2();
  d.inflation_rate = ps.inflation_rate();
  d.n_over_cn = ps.n_over_cn();
  d.smallness_warning = d.n_over_cn > 0.1;
  return d;
}

ParamSet preset_thm1(const Exponent& p, int N, int k0) {
  if (!p.is_inf && p.v <= 6) throw std::invalid_argument("preset_thm1: requires p > 6");
  mpq_class gap = mpq_class(1, 2) - p.three_over();
  ParamSet ps;
  ps.regime = Regime::THM1;
  ps.p = p;
  ps.eps1 = gap / 4;
  ps.eps = gap / 5;
  mpq_class i3p0 = mpq_class(1, 16) +
                   (p.is_inf ? mpq_class(0) : mpq_class(21, 8) / p.v);
  ps.p0 = Exponent::of(3 / i3p0);
  mpq_class q_lo = mpq_class(15, 16) - (p.is_inf ? mpq_class(0) : mpq_class(21, 8) / p.v);
  mpq_class q_hi = mpq_class(19, 20) - (p.is_inf ? mpq_class(0) : mpq_class(27, 10) / p.v);
  mpq_class i3q = (q_lo + q_hi) / 2;
  ps.q = Exponent::of(3 / i3q);
  ps.N = N;
  ps.k0 = k0;
  return ps;
}

ParamSet preset_thm2(const mpq_class& p, int N, int k0) {
  if (p <= 6) throw std::invalid_argument("preset_thm2: requires 6 < p < inf");
  ParamSet ps;
  ps.regime = Regime::THM2;
  ps.p = Exponent::of(p);
  mpq_class gap = mpq_class(1, 2) - ps.p.three_over();
  mpq_class i3q_lo(1, 2), i3q_hi;
  if (p <= 18) {
    ps.eps1 = gap / 4;
    ps.eps = gap / 5;
    i3q_hi = mpq_class(23, 40) - mpq_class(9, 20) / p;
  } else {
    ps.eps1 = mpq_class(21, 10) / p;
    ps.eps = mpq_class(2) / p;
    i3q_hi = mpq_class(1, 2) + mpq_class(7, 10) / p;
  }
  mpq_class i3q = (i3q_lo + i3q_hi) / 2;
  ps.q = Exponent::of(3 / i3q);
  ps.N = N;
  ps.k0 = k0;
  return ps;
}

ParamSet preset_appendix(int N, int k0) {
  // the p = infinity limit of the THM2 construction
  ParamSet ps;
  ps.regime = Regime::APPENDIX_A;
  ps.p = Exponent::inf();
  mpq_class gap(1, 2);
  ps.eps1 = gap / 4;
  ps.eps = gap / 5;
  // first min-branch of the q-window at 3/p = 0
  mpq_class i3q_hi = mpq_class(3, 4) + 2 * ps.eps - 3 * ps.eps1;
  mpq_class i3q = (mpq_class(1, 2) + i3q_hi) / 2;
  ps.q = Exponent::of(3 / i3q);
  ps.N = N;
  ps.k0 = k0;
  return ps;
}

ParamSet preset_for(Regime regime, const Exponent& p, int N, int k0) {
  switch (regime) {
    case Regime::THM1: return preset_thm1(p, N, k0);
    case Regime::THM2:
      if (p.is_inf) throw std::invalid_argument("THM2 preset needs finite p");
      return preset_thm2(p.v, N, k0);
    case Regime::APPENDIX_A: return preset_appendix(N, k0);
  }
  throw std::logic_error("preset_for: bad regime");
}

mpq_class parse_rational(const std::string& s) {
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    mpq_class num = parse_rational(s.substr(0, slash));
    mpq_class den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("parse_rational: zero denominator");
    mpq_class r = num / den;
    r.canonicalize();
    return r;
  }
  auto dot = s.find('.');
  if (dot != std::string::npos) {
    std::string digits = s.substr(0, dot) + s.substr(dot + 1);
    std::size_t frac_len = s.size() - dot - 1;
    mpz_class num(digits, 10);
    mpz_class den;
    mpz_ui_pow_ui(den.get_mpz_t(), 10, frac_len);
    mpq_class r(num, den);
    r.canonicalize();
    return r;
  }
  mpq_class r(s, 10);
  r.canonicalize();
  return r;
}

std::string rat_str(const mpq_class& q) {
  std::ostringstream os;
  os << q.get_num().get_str();
  if (q.get_den() != 1) os << "/" << q.get_den().get_str();
  return os.str();
}

double rat_d(const mpq_class& q) { return q.get_d(); }

}  // namespace niflab
