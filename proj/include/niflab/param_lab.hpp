#pragma once

#include <gmpxx.h>

#include <optional>
#include <string>
#include <vector>

namespace niflab {

// Lebesgue exponent that may be infinite; all feasibility formulas consume it
// through 3/p, which the infinity sentinel maps to 0.
struct Exponent {
  bool is_inf = false;
  mpq_class v;

  static Exponent inf() { return {true, mpq_class(0)}; }
  static Exponent of(const mpq_class& q) { return {false, q}; }
  mpq_class three_over() const { return is_inf ? mpq_class(0) : mpq_class(mpq_class(3) / v); }
  std::string str() const;
};

enum class Regime { THM1, THM2, APPENDIX_A };

std::string regime_name(Regime r);
Regime regime_from_name(const std::string& s);

// Single source of truth for every exponent in the construction.  Derived
// scales are recomputed from the definitions on each call, never stored.
struct ParamSet {
  Regime regime = Regime::THM1;
  Exponent p;                  // > 6 (may be inf in THM1 / APPENDIX_A)
  Exponent q;                  // in (3, 6)
  std::optional<Exponent> p0;  // absent in THM2 / APPENDIX_A
  mpq_class eps, eps1;
  int N = 200;
  int k0 = 100;
  double mu = 1.0;

  // log2 C(N) = (N/2) (1/2 - 3/p - 2 eps1)
  mpq_class cn_log2() const;
  // log2 T0 = -2 (1 + eps) N
  mpq_class t0_log2() const;
  // 2 (eps1 - eps)
  mpq_class inflation_rate() const;
  double n_over_cn() const;
  double t0() const;
  double cn() const;

  std::string describe() const;
};

struct Condition {
  std::string name;
  mpq_class slack;  // > 0 means the strict inequality holds
  bool pass = false;
};

struct FeasibilityReport {
  std::vector<Condition> conditions;
  bool feasible = false;
  // Lemma 4.1 extras
  int binding_branch = -1;             // which min-branch is tightest
  bool dropped_branches_redundant = false;  // branches 1,2 vs 3,4
  std::string summary() const;
};

FeasibilityReport check_lemma31(const ParamSet& ps);
FeasibilityReport check_lemma41(const ParamSet& ps);

// feasibility gate used by the data builder.  THM1 and THM2 use the lemmas
// directly; the p = infinity construction drops the q-branch that the second
// modified pressure removes from the estimates (it is unsatisfiable with
// q in (3,6) at 3/p = 0, which is what forces that reformulation).
FeasibilityReport check_for_regime(const ParamSet& ps, Regime regime);

struct EquivalenceLine {
  std::string lhs;        // description of the T0-scaled quantity
  mpq_class n_coeff;      // per-N coefficient of log2(LHS) at T = T0
  mpq_class rhs_slack;    // RHS - LHS of the stated parameter inequality
  bool agree = false;     // exact identity n_coeff == -rhs_slack
};

// the displayed equivalences: decay of each T0-scaled quantity is exactly the
// stated inequality on the parameters (checked as a rational identity)
std::vector<EquivalenceLine> remark_equivalences(const ParamSet& ps, Regime regime);

struct DerivedScales {
  mpq_class cn_log2, t0_log2, inflation_rate;
  double n_over_cn = 0.0;
  bool smallness_warning = false;  // N / C(N) > 0.1
};
DerivedScales derived_scales(const ParamSet& ps);

// presets instantiating the worked examples; feasible for every rational p in
// the stated ranges
ParamSet preset_thm1(const Exponent& p, int N, int k0 = 100);
ParamSet preset_thm2(const mpq_class& p, int N, int k0 = 100);
ParamSet preset_appendix(int N, int k0 = 100);
ParamSet preset_for(Regime regime, const Exponent& p, int N, int k0 = 100);

// "2.1" -> 21/10, "1/3" -> 1/3, "inf" rejected here (use Exponent::inf)
mpq_class parse_rational(const std::string& s);

std::string rat_str(const mpq_class& q);
double rat_d(const mpq_class& q);

}  // namespace niflab
