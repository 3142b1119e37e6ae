#pragma once

#include <array>
#include <complex>
#include <memory>
#include <optional>
#include <string>

#include "niflab/profile.hpp"
#include "niflab/scaled.hpp"

namespace niflab {

// 3-vector in extended-exponent form: value = mant * 2^exp2.  Used to evaluate
// symbols at frequencies like 2^k e1 + w without ever forming 2^k in a product.
struct ScaledVec3 {
  std::array<double, 3> mant{0, 0, 0};
  std::int64_t exp2 = 0;

  static ScaledVec3 from_plain(const std::array<double, 3>& v);
  // center + offset with the offset absorbed at the center's scale
  static ScaledVec3 from_center_offset(const std::array<double, 3>& center,
                                       const std::array<double, 3>& offset);
  Scaled component(int i) const { return Scaled(std::complex<double>(mant[i], 0.0), exp2); }
  Scaled radius() const;
  std::array<double, 3> to_plain() const;
};

// Fourier multiplier as an immutable expression tree over
// {xi1, xi2, xi3, |xi|, constants} with {+, -, *, /, integer pow}, plus the
// tabulated block profile phi(2^{-j} xi) as an extra leaf, plus an optional
// heat factor e^{-mu t |xi|^2} with t bound at evaluation time.
class MultiplierSymbol;
using SymbolPtr = std::shared_ptr<const MultiplierSymbol>;

class MultiplierSymbol {
 public:
  enum class Kind { Xi1, Xi2, Xi3, AbsXi, Const, Add, Sub, Mul, Div, Pow, Profile };

  // evaluation; t only matters when a heat factor is attached
  std::complex<double> eval(const std::array<double, 3>& xi, double t = 0.0) const;
  Scaled eval_scaled(const ScaledVec3& xi, double t = 0.0) const;

  bool has_heat() const { return heat_mu_.has_value(); }
  double heat_mu() const { return *heat_mu_; }

  // sampled structural probes
  std::optional<double> homogeneity_degree() const;      // nullopt if not homogeneous
  std::optional<int> parity() const;                     // +1 even, -1 odd, nullopt mixed
  std::optional<std::complex<double>> as_constant(double tol = 1e-12) const;

  std::string to_prefix() const;                         // serialization
  static SymbolPtr parse_prefix(const std::string& s, const DyadicProfile* prof = nullptr);

  // --- factories ---
  static SymbolPtr xi(int i);
  static SymbolPtr abs_xi();
  static SymbolPtr constant(std::complex<double> c);
  static SymbolPtr add(SymbolPtr a, SymbolPtr b);
  static SymbolPtr sub(SymbolPtr a, SymbolPtr b);
  static SymbolPtr mul(SymbolPtr a, SymbolPtr b);
  static SymbolPtr div(SymbolPtr a, SymbolPtr b);
  static SymbolPtr pow(SymbolPtr a, int n);
  // phi(2^{-j} |xi|) with the shared profile tabulation
  static SymbolPtr block_profile(const DyadicProfile& prof, int j);
  static SymbolPtr with_heat(SymbolPtr a, double mu);

  // common operators
  static SymbolPtr riesz(int i);                 // -i xi_i / |xi|
  static SymbolPtr leray_entry(int i, int j);    // xi_i xi_j / |xi|^2
  static SymbolPtr laplacian();                  // -|xi|^2
  static SymbolPtr divergence_dot(const std::array<SymbolPtr, 3>& v);  // i xi . v

 private:
  MultiplierSymbol(Kind k) : kind_(k) {}

  Kind kind_;
  std::complex<double> const_{0.0, 0.0};
  int ipow_ = 1;
  int block_j_ = 0;
  const DyadicProfile* prof_ = nullptr;  // non-owning; block_profile holders keep it alive externally
  std::shared_ptr<const DyadicProfile> prof_keep_;
  SymbolPtr a_, b_;
  std::optional<double> heat_mu_;

  std::complex<double> eval_tree(const std::array<double, 3>& xi) const;
  Scaled eval_tree_scaled(const ScaledVec3& xi) const;
};

}  // namespace niflab
