#pragma once

#include <functional>

#include "niflab/bump_sum.hpp"
#include "niflab/param_lab.hpp"

namespace niflab {

// The constructed data family: a0 scalar, u0 divergence-free 3-vector, both
// finite bump sums with centers +-2^k e1, k = k0..N.
struct DataFamily {
  Regime regime = Regime::THM1;
  ParamSet params;
  BumpSum a0;  // ncomp 1
  BumpSum u0;  // ncomp 3
  // per-k amplitude exponents (log2), kept for predictors
  double a_weight_log2(int k) const;
  double u_weight_log2(int k) const;
};

// rejects infeasible parameter sets naming the violated condition
DataFamily build_data(const ParamSet& ps, Regime regime);

struct NormEntry {
  std::string name;
  double measured_log2 = 0.0;
  double predictor_log2 = 0.0;
  double ratio = 0.0;  // measured / predictor
  bool is_bound = false;
};

struct NormCertificate {
  std::vector<NormEntry> entries;          // the three certified norms
  std::vector<NormEntry> general_entries;  // sampled (s, r) general-index bounds
  const NormEntry& by_name(const std::string& n) const;
};

NormCertificate certify_norms(const DataFamily& data);

// effective direction constant: the integrated form of the annulus direction
// inequality; weight is a nonnegative radial-argument marginal on the probe
// annulus
double direction_constant(const DyadicProfile& probe,
                          const std::function<double(const std::array<double, 3>&)>& weight,
                          bool swap_axes = false);

}  // namespace niflab
