#include "niflab/grid_field.hpp"

#include <cmath>
#include <stdexcept>

#include "niflab/fft3.hpp"

namespace niflab {

GridField::GridField(int M, double L, int ncomp) : M_(M), L_(L), ncomp_(ncomp) {
  if (M <= 0 || (M & (M - 1)) != 0) throw std::invalid_argument("GridField: M must be a power of 2");
  comp_.assign(ncomp, std::vector<std::complex<double>>(size3(), {0.0, 0.0}));
}

GridField GridField::operator+(const GridField& o) const {
  GridField g = *this;
  for (int c = 0; c < ncomp_; ++c)
    for (std::size_t i = 0; i < g.comp_[c].size(); ++i) g.comp_[c][i] += o.comp_[c][i];
  return g;
}

GridField GridField::operator-(const GridField& o) const {
  GridField g = *this;
  for (int c = 0; c < ncomp_; ++c)
    for (std::size_t i = 0; i < g.comp_[c].size(); ++i) g.comp_[c][i] -= o.comp_[c][i];
  return g;
}

GridField& GridField::operator*=(double s) {
  for (auto& v : comp_)
    for (auto& z : v) z *= s;
  return *this;
}

std::vector<std::complex<double>> GridField::to_phys(int c) const {
  std::vector<std::complex<double>> out(size3());
  fft3::backward_c2c(M_, comp_[c].data(), out.data());
  return out;
}

double GridField::lp_norm(double p) const {
  std::vector<std::vector<std::complex<double>>> phys(ncomp_);
  for (int c = 0; c < ncomp_; ++c) phys[c] = to_phys(c);
  const double dV = std::pow(2.0 * M_PI * L_ / M_, 3.0);
  if (p == kInf) {
    double m = 0.0;
    for (std::size_t i = 0; i < size3(); ++i) {
      double a2 = 0.0;
      for (int c = 0; c < ncomp_; ++c) a2 += std::norm(phys[c][i]);
      m = std::max(m, a2);
    }
    return std::sqrt(m);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < size3(); ++i) {
    double a2 = 0.0;
    for (int c = 0; c < ncomp_; ++c) a2 += std::norm(phys[c][i]);
    acc += std::pow(a2, 0.5 * p);
  }
  return std::pow(acc * dV, 1.0 / p);
}

double GridField::max_spectrum_radius() const {
  double r2max = 0.0;
  for (int c = 0; c < ncomp_; ++c)
    for (int ix = 0; ix < M_; ++ix)
      for (int iy = 0; iy < M_; ++iy)
        for (int iz = 0; iz < M_; ++iz)
          if (at(c, ix, iy, iz) != std::complex<double>(0.0, 0.0)) {
            auto v = xi(ix, iy, iz);
            r2max = std::max(r2max, v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
          }
  return std::sqrt(r2max);
}

double GridField::min_spectrum_radius() const {
  double r2min = -1.0;
  for (int c = 0; c < ncomp_; ++c)
    for (int ix = 0; ix < M_; ++ix)
      for (int iy = 0; iy < M_; ++iy)
        for (int iz = 0; iz < M_; ++iz)
          if (at(c, ix, iy, iz) != std::complex<double>(0.0, 0.0)) {
            auto v = xi(ix, iy, iz);
            double r2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            if (r2 > 0 && (r2min < 0 || r2 < r2min)) r2min = r2;
          }
  return r2min < 0 ? 0.0 : std::sqrt(r2min);
}

bool GridField::conjugate_symmetric(double tol) const {
  double peak = 0.0, worst = 0.0;
  for (int c = 0; c < ncomp_; ++c)
    for (int ix = 0; ix < M_; ++ix)
      for (int iy = 0; iy < M_; ++iy)
        for (int iz = 0; iz < M_; ++iz) {
          auto v = at(c, ix, iy, iz);
          peak = std::max(peak, std::abs(v));
          int jx = (M_ - ix) % M_, jy = (M_ - iy) % M_, jz = (M_ - iz) % M_;
          worst = std::max(worst, std::abs(v - std::conj(at(c, jx, jy, jz))));
        }
  return peak == 0.0 || worst <= tol * peak;
}

GridField dyadic_block(const GridField& f, const DyadicProfile& prof, int j) {
  double s = std::exp2(static_cast<double>(-j));
  return f.apply_multiplier([&](const std::array<double, 3>& xi) {
    return prof.phi(s * std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]));
  });
}

GridField lowpass(const GridField& f, const DyadicProfile& prof, int j) {
  double s = std::exp2(static_cast<double>(-j));
  return f.apply_multiplier([&](const std::array<double, 3>& xi) {
    return prof.chi(s * std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]));
  });
}

std::pair<int, int> block_range(const GridField& f) {
  double rmax = f.max_spectrum_radius();
  double rmin = f.min_spectrum_radius();
  if (rmax == 0.0 || rmin == 0.0) return {0, -1};
  int j_hi = static_cast<int>(std::ceil(std::log2(rmax / DyadicProfile::kSupportLo)));
  int j_lo = static_cast<int>(std::floor(std::log2(rmin / DyadicProfile::kSupportHi)));
  return {j_lo, j_hi};
}

BesovResult besov_norm(const GridField& f, const DyadicProfile& prof, const BesovIndex& idx) {
  auto [j_lo, j_hi] = block_range(f);
  std::map<int, double> weighted;
  for (int j = j_lo; j <= j_hi; ++j) {
    double n = dyadic_block(f, prof, j).lp_norm(idx.p);
    if (n > 0.0) weighted[j] = std::exp2(idx.s * j) * n;
  }
  return accumulate_blocks(weighted, idx.r);
}

GridField derivative(const GridField& f, const std::array<int, 3>& gamma) {
  return f.apply_multiplier([&](const std::array<double, 3>& xi) {
    std::complex<double> m(1.0, 0.0);
    for (int d = 0; d < 3; ++d)
      for (int g = 0; g < gamma[d]; ++g) m *= std::complex<double>(0.0, xi[d]);
    return m;
  });
}

BernsteinReport bernstein_check(const GridField& f, int j,
                                const std::array<int, 3>& gamma, double p, double q) {
  if (p > q) throw std::invalid_argument("bernstein_check: requires p <= q");
  BernsteinReport rep;
  int order = gamma[0] + gamma[1] + gamma[2];
  rep.num = derivative(f, gamma).lp_norm(q);
  double qinv = q == kInf ? 0.0 : 1.0 / q;
  double pinv = p == kInf ? 0.0 : 1.0 / p;
  rep.den = std::exp2(j * order + j * (3.0 * pinv - 3.0 * qinv)) * f.lp_norm(p);
  rep.ratio = rep.den == 0.0 ? 0.0 : rep.num / rep.den;
  return rep;
}

GridField pointwise_product(const GridField& f, const GridField& g) {
  if (f.M() != g.M() || f.L() != g.L())
    throw std::invalid_argument("pointwise_product: mismatched grids");
  int nc = std::max(f.ncomp(), g.ncomp());
  if (f.ncomp() != 1 && g.ncomp() != 1 && f.ncomp() != g.ncomp())
    throw std::invalid_argument("pointwise_product: incompatible components");
  GridField out(f.M(), f.L(), nc);
  const double inv = 1.0 / static_cast<double>(out.size3());
  std::vector<std::complex<double>> pf, pg, prod(out.size3());
  for (int c = 0; c < nc; ++c) {
    pf = f.to_phys(f.ncomp() == 1 ? 0 : c);
    pg = g.to_phys(g.ncomp() == 1 ? 0 : c);
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = pf[i] * pg[i];
    fft3::forward_c2c(out.M(), prod.data(), out.spectrum(c).data());
    for (auto& z : out.spectrum(c)) z *= inv;
  }
  return out;
}

BonyParts bony_decompose(const GridField& f, const GridField& g, const DyadicProfile& prof) {
  auto [fj_lo, fj_hi] = block_range(f);
  auto [gj_lo, gj_hi] = block_range(g);
  BonyParts parts{GridField(f.M(), f.L(), std::max(f.ncomp(), g.ncomp())),
                  GridField(f.M(), f.L(), std::max(f.ncomp(), g.ncomp())),
                  GridField(f.M(), f.L(), std::max(f.ncomp(), g.ncomp()))};

  for (int j = gj_lo; j <= gj_hi; ++j) {
    GridField dg = dyadic_block(g, prof, j);
    if (dg.max_spectrum_radius() == 0.0) continue;
    parts.Tf_g = parts.Tf_g + pointwise_product(lowpass(f, prof, j - 1), dg);
  }
  for (int j = fj_lo; j <= fj_hi; ++j) {
    GridField df = dyadic_block(f, prof, j);
    if (df.max_spectrum_radius() == 0.0) continue;
    parts.Tg_f = parts.Tg_f + pointwise_product(df, lowpass(g, prof, j - 1));
  }
  for (int j = fj_lo; j <= fj_hi; ++j) {
    GridField df = dyadic_block(f, prof, j);
    if (df.max_spectrum_radius() == 0.0) continue;
    GridField tg(g.M(), g.L(), g.ncomp());
    for (int k = j - 1; k <= j + 1; ++k)
      if (k >= gj_lo && k <= gj_hi) tg = tg + dyadic_block(g, prof, k);
    parts.R = parts.R + pointwise_product(df, tg);
  }
  return parts;
}

}  // namespace niflab
