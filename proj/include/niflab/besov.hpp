#pragma once

#include <limits>
#include <map>
#include <vector>

namespace niflab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Index triple of a homogeneous Besov space: s regularity, p integrability,
// r summation exponent; p, r >= 1 with infinity as the sup sentinel.
struct BesovIndex {
  double s = 0.0;
  double p = 2.0;
  double r = 1.0;
};

struct BesovResult {
  double value = 0.0;
  int j_lo = 0, j_hi = 0;    // block range actually summed
  double floor = 0.0;        // truncation floor applied to 2^{sj}||.||_p
  bool truncated = false;
  bool diverged = false;     // partial sums failed the Cauchy criterion
  bool is_bound = false;     // some block value is a triangle-inequality bound
};

// l^r accumulation of per-block weighted norms 2^{sj} ||Delta_j f||_p over a
// j-indexed map, with the truncation-floor bookkeeping shared by the grid and
// bump engines.
BesovResult accumulate_blocks(const std::map<int, double>& weighted, double r);

// Per-step, per-block L^p norms of a time-dependent field; carrier for the
// Chemin-Lerner time-space norms.
struct TimeSeriesNorm {
  double dt = 0.0;
  // values[step] maps block index j -> ||Delta_j f(t_step)||_{L^p}
  std::vector<std::map<int, double>> values;
};

struct CheminLernerResult {
  double value = 0.0;
  bool dt_unstable = false;  // time integral changes > 5% at half resolution
};

// || f ||_{tilde L^rho_T Bdot^s_{p,q}}: L^rho in time inside each block
// (trapezoid), l^q over blocks outside.  The L^p norms are the stored ones.
CheminLernerResult chemin_lerner_norm(const TimeSeriesNorm& series, const BesovIndex& idx,
                                      double rho);

}  // namespace niflab
