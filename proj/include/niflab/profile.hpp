#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace niflab {

// Monotone C^inf step from 0 at x<=0 to 1 at x>=1: the normalized integral of
// exp(-1/(x(1-x))), tabulated on a fine uniform grid and evaluated with cubic
// Hermite interpolation (the derivative is exact at the knots).
class SmoothStep {
 public:
  explicit SmoothStep(int resolution = 4096);       // number of knots
  explicit SmoothStep(std::vector<double> table);   // from an imported table

  double operator()(double x) const;
  double derivative(double x) const;

  const std::vector<double>& table() const { return coef_; }
  int resolution() const { return static_cast<int>(coef_.size()) - 1; }

 private:
  static double weight(double x);   // exp(-1/(x(1-x))) on (0,1)
  void build_knot_derivatives();
  double norm_ = 1.0;               // integral of weight over [0,1]
  std::vector<double> coef_;        // cumulative values at the knots
  std::vector<double> dcoef_;       // scaled derivatives at the knots
};

// The radial Littlewood-Paley profile phi with supp phi = {3/4 <= r <= 8/3},
// built from a low-pass chi (1 below 3/4, 0 above 4/3) as phi(r) = chi(r/2) - chi(r).
// The telescoping construction makes the dyadic partition of unity exact to
// rounding regardless of how chi is tabulated.
class DyadicProfile {
 public:
  static constexpr double kSupportLo = 0.75;       // 3/4
  static constexpr double kSupportHi = 8.0 / 3.0;  // 8/3
  static constexpr double kChiHi = 4.0 / 3.0;

  DyadicProfile(std::shared_ptr<const SmoothStep> step, int probe_scale);

  double chi(double r) const;         // low-pass S_j multiplier profile
  double phi(double r) const;         // annulus block profile
  double phi_vec(const std::array<double, 3>& xi) const;
  double chi_vec(const std::array<double, 3>& xi) const;

  // phi(2^{-j} xi) for a radius given as r = 2^{r_log2} * r_mant; exact in the
  // exponent so it works at |xi| ~ 2^{+-several hundred}.
  double phi_at_scale(double r_mant, std::int64_t r_exp2, int j) const;

  int probe_scale() const { return probe_scale_; }
  // probe annulus bounds: [3/4, 8/3] * 2^{-probe_scale}
  double probe_lo() const;
  double probe_hi() const;

  const SmoothStep& step() const { return *step_; }

  // versioned binary table (little-endian float64) so every module can share a
  // bit-identical profile
  void export_table(const std::string& path) const;
  static DyadicProfile import_table(const std::string& path);
  std::uint64_t table_hash() const;

 private:
  std::shared_ptr<const SmoothStep> step_;
  int probe_scale_;
};

// Factory with validation; transition_kind "canonical" is the bump-integral
// step; anything that breaks nonnegativity or the partition of unity is
// rejected.  Deterministic for fixed arguments.
DyadicProfile make_dyadic_profile(const std::string& transition_kind = "canonical",
                                  int resolution = 4096, int probe_scale = 8);

// The data-side bump phi_hat: radial, 1 on r<=1, 0 on r>=2, the same canonical
// transition in between.
class PhiBump {
 public:
  explicit PhiBump(std::shared_ptr<const SmoothStep> step) : step_(std::move(step)) {}
  double operator()(double r) const;
  double vec(const std::array<double, 3>& z) const;
  static constexpr double kSupportRadius = 2.0;
  const SmoothStep& step() const { return *step_; }

 private:
  std::shared_ptr<const SmoothStep> step_;
};

// One shared canonical step instance (profile and bump must use the same table).
std::shared_ptr<const SmoothStep> canonical_step();

}  // namespace niflab
