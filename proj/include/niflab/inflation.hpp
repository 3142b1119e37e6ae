#pragma once

#include <cstdint>
#include <vector>

#include "niflab/initial_data.hpp"

namespace niflab {

// One interacting pair of bump terms under the Duhamel bilinear map; the
// tau-integral is folded into the A-kernel, leaving an integrand over
// (xi, w) with eta = cb + w.  Spectral support in xi: |xi - center| <= 4.
struct PairBoxIntegrand {
  std::array<double, 3> center{0, 0, 0};  // ca + cb
  std::array<double, 3> ca{0, 0, 0}, cb{0, 0, 0};
  Scaled pref;                  // coefficient product including mu (2pi)^{-3}
  std::vector<SymbolPtr> sym_a; // size 1, or 3 for the gradient contraction
  SymbolPtr sym_b;
  SymbolPtr mid;                // outer multiplier at xi (nullptr = identity)
  bool lap_b = false;           // include (-|eta|^2)
  bool grad_contract = false;   // sum_i sym_a[i](xi-eta) (i eta_i)
  bool heat_a = false;          // leg carries e^{-mu tau |.|^2}
  bool heat_b = true;
  double t = 0.0, mu = 1.0;

  Scaled eval(const std::array<double, 3>& xi, const std::array<double, 3>& w) const;
};

struct U1Assembly {
  DataFamily data;
  double t = 0.0, mu = 1.0;
  std::array<std::vector<PairBoxIntegrand>, 3> comp;  // full Leray-projected U1
  std::vector<PairBoxIntegrand> boxes_11;             // (xi1^2+xi3^2)/|xi|^2 on a0 lap U0^2
  std::vector<PairBoxIntegrand> boxes_12;             // -xi1 xi2/|xi|^2 on a0 lap U0^1
  std::vector<PairBoxIntegrand> upsilon;              // appendix advection boxes (all rows)
  std::array<std::vector<PairBoxIntegrand>, 3> upsilon_comp;
};

U1Assembly assemble_u1(const DataFamily& data, double t);

struct QuadResult {
  Scaled value;
  double rel_error = 0.0;
  bool converged = true;
};

// adaptive pairing of general boxes against the probe annulus (only boxes
// whose xi-support meets the annulus contribute)
QuadResult pairing(const std::vector<PairBoxIntegrand>& boxes, const DyadicProfile& probe,
                   double rel_tol = 1e-8, int max_levels = 3);

// integral of |spectrum| over the probe (cancellation-free magnitude)
QuadResult pairing_abs(const std::vector<PairBoxIntegrand>& boxes, const DyadicProfile& probe,
                       double rel_tol = 1e-6, int max_levels = 3);

struct BValue {
  Scaled value;  // signed
  double rel_error = 0.0;
  Scaled predictor;          // leading t-linear estimate (geometry constant route)
  bool taylor_regime = true;  // t 2^{2N} < 1
  bool converged = true;
};

// specialized diagonal-pair quadratures; the conjugate +-2^k legs are combined
// analytically so the kernels stay well conditioned at any k
BValue compute_B1(const U1Assembly& a, const DyadicProfile& probe, double rel_tol = 1e-6);
BValue compute_B2(const U1Assembly& a, const DyadicProfile& probe, double rel_tol = 1e-6);

struct InflationReport {
  double b1_log2 = 0.0, b2_log2 = 0.0;
  double b1_sign = 0.0, b2_sign = 0.0;
  double pairing_log2 = 0.0, pairing_sign = 0.0;
  double lower_bound_log2 = 0.0;  // log2(|B1| - |B2|)
  double besov_m12_log2 = 0.0;    // ||U1||_{B^{-1/2}_{6,1}} (diagonal part + far bound)
  double binf_log2 = 0.0;         // ||U1||_{B^{-1}_{inf,inf}}
  double far_bound_log2 = 0.0;    // flagged triangle bound on far boxes
  bool besov_is_bound = false;
  double ratio_binf_over_pairing = 0.0;
  double ratio_besov_over_binf = 0.0;
  int N = 0;
  double t = 0.0;
  bool identity_ok = false;  // pairing == B1 + B2 within quadrature error
};

InflationReport lower_bound_chain(const U1Assembly& a, const DyadicProfile& probe);

struct SweepRow {
  int N = 0;
  double t_log2 = 0.0;
  double b1_log2 = 0.0, b2_log2 = 0.0;
  double lb_log2 = 0.0;          // log2(|B1| - |B2|)
  double b2_over_b1_log2 = 0.0;
  double quad_rel_error = 0.0;
};

struct SweepTable {
  std::vector<SweepRow> rows;
  double slope = 0.0;          // least-squares slope of lb_log2 vs N
  double slope_stderr = 0.0;
  double expected_rate = 0.0;  // 2 (eps1 - eps) from the preset
  Regime regime = Regime::THM1;
};

// t = T0(N) per row unless fixed_t_log2 is finite
SweepTable inflation_sweep(const Exponent& p, Regime regime, const std::vector<int>& N_list,
                           int k0 = 100, double fixed_t_log2 =
                               std::numeric_limits<double>::quiet_NaN());

struct AppendixSplit {
  double xi1_pairing_log2 = 0.0;        // signed Xi1 probe pairing magnitude
  double upsilon_pairing_log2 = 0.0;    // signed Upsilon1 pairing (vanishes by parity)
  double xi1_abs_log2 = 0.0;            // int phi |spectrum|
  double upsilon_abs_log2 = 0.0;
  double ratio_abs_log2 = 0.0;          // upsilon_abs - xi1_abs
};

AppendixSplit appendixA_split(const U1Assembly& a, const DyadicProfile& probe);

struct McResult {
  double estimate = 0.0;
  double sigma = 0.0;
  std::int64_t n = 0;
  double log2_scale = 0.0;  // estimate and sigma are in units of 2^{log2_scale}
  bool variance_flag = false;
};

// importance-sampled Monte Carlo of the raw (xi, eta, tau) integral with
// numeric tau-quadrature; never touches the closed-form kernel.  Deterministic
// for a fixed seed regardless of threading.
McResult mc_oracle(const DataFamily& data, double t, const DyadicProfile& probe,
                   std::int64_t n_samples, std::uint64_t seed, bool b2_mode = false);

}  // namespace niflab
