#pragma once

#include <array>
#include <complex>
#include <vector>

#include "niflab/besov.hpp"
#include "niflab/profile.hpp"

namespace niflab {

// Band-limited field on the torus [0, 2*pi*L)^3, stored as full complex
// spectral coefficients c_n (f(x) = sum_n c_n e^{i n.x / L}, |n_i| <= M/2).
// Physical frequencies are n/L; L^p norms carry the volume element, so the
// R^3 dilation identities hold exactly under the L -> L/2 reinterpretation.
class GridField {
 public:
  GridField() = default;
  GridField(int M, double L, int ncomp);

  int M() const { return M_; }
  double L() const { return L_; }
  int ncomp() const { return ncomp_; }
  std::size_t size3() const { return static_cast<std::size_t>(M_) * M_ * M_; }

  std::complex<double>& at(int c, int ix, int iy, int iz) {
    return comp_[c][idx(ix, iy, iz)];
  }
  const std::complex<double>& at(int c, int ix, int iy, int iz) const {
    return comp_[c][idx(ix, iy, iz)];
  }
  std::vector<std::complex<double>>& spectrum(int c) { return comp_[c]; }
  const std::vector<std::complex<double>>& spectrum(int c) const { return comp_[c]; }

  std::size_t idx(int ix, int iy, int iz) const {
    return (static_cast<std::size_t>(ix) * M_ + iy) * M_ + iz;
  }
  int freq_of(int i) const { return i <= M_ / 2 - 1 ? i : i - M_; }
  int index_of_freq(int n) const { return n >= 0 ? n : n + M_; }
  std::array<double, 3> xi(int ix, int iy, int iz) const {
    return {freq_of(ix) / L_, freq_of(iy) / L_, freq_of(iz) / L_};
  }

  // f(2x): same coefficients, half the period (every frequency doubles)
  GridField dilate_up() const {
    GridField g = *this;
    g.L_ *= 0.5;
    return g;
  }

  GridField multiplied(const std::vector<double>& radial_multiplier_unused) const = delete;

  // apply a scalar spectral multiplier m(xi) to every component
  template <typename F>
  GridField apply_multiplier(F&& m) const {
    GridField g(M_, L_, ncomp_);
    for (int c = 0; c < ncomp_; ++c)
      for (int ix = 0; ix < M_; ++ix)
        for (int iy = 0; iy < M_; ++iy)
          for (int iz = 0; iz < M_; ++iz) {
            auto v = at(c, ix, iy, iz);
            if (v != std::complex<double>(0.0, 0.0))
              g.at(c, ix, iy, iz) = v * m(xi(ix, iy, iz));
          }
    return g;
  }

  GridField operator+(const GridField& o) const;
  GridField operator-(const GridField& o) const;
  GridField& operator*=(double s);

  // physical samples (complex synthesis)
  std::vector<std::complex<double>> to_phys(int c) const;

  // L^p over the torus with volume element (2 pi L / M)^3; multiple components
  // enter through the pointwise Euclidean magnitude.  p = inf -> max sample.
  double lp_norm(double p) const;

  double max_spectrum_radius() const;  // max |xi| over nonzero modes (0 if empty)
  double min_spectrum_radius() const;  // min |xi| over nonzero modes excluding 0

  bool conjugate_symmetric(double tol = 1e-12) const;

 private:
  int M_ = 0;
  double L_ = 1.0;
  int ncomp_ = 0;
  std::vector<std::vector<std::complex<double>>> comp_;
};

// --- lp_engine operations on grid fields ---

// Delta_j f: spectrum times phi(2^{-j} xi)
GridField dyadic_block(const GridField& f, const DyadicProfile& prof, int j);
// S_j f: spectrum times chi(2^{-j} xi)
GridField lowpass(const GridField& f, const DyadicProfile& prof, int j);

// range of blocks intersecting the spectrum support
std::pair<int, int> block_range(const GridField& f);

BesovResult besov_norm(const GridField& f, const DyadicProfile& prof, const BesovIndex& idx);

// d^gamma f via (i xi)^gamma
GridField derivative(const GridField& f, const std::array<int, 3>& gamma);

struct BernsteinReport {
  double ratio = 0.0;      // ||d^g f||_q / (2^{j|g|+j(3/p-3/q)} ||f||_p)
  double num = 0.0, den = 0.0;
};
BernsteinReport bernstein_check(const GridField& f, int j,
                                const std::array<int, 3>& gamma, double p, double q);

struct BonyParts {
  GridField Tf_g;  // sum_j S_{j-1} f Delta_j g
  GridField Tg_f;
  GridField R;     // sum_j Delta_j f tildeDelta_j g
};
BonyParts bony_decompose(const GridField& f, const GridField& g, const DyadicProfile& prof);

// pointwise product on the grid (no dealiasing; exact for the reconstruction
// identity which compares like against like)
GridField pointwise_product(const GridField& f, const GridField& g);

}  // namespace niflab
