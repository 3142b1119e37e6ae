#include "niflab/nse_probe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "niflab/aa_kernel.hpp"
#include "niflab/fft3.hpp"

namespace niflab {

SimField::SimField(const TorusSpec& spec, int ncomp)
    : M_(spec.M), L_(spec.L), ncomp_(ncomp) {
  if (M_ <= 0 || (M_ & (M_ - 1)) != 0)
    throw std::invalid_argument("SimField: M must be a power of 2");
  comp_.assign(ncomp, std::vector<std::complex<double>>(spec_size(), {0.0, 0.0}));
}

SimField& SimField::operator+=(const SimField& o) {
  for (int c = 0; c < ncomp_; ++c)
    for (std::size_t i = 0; i < comp_[c].size(); ++i) comp_[c][i] += o.comp_[c][i];
  return *this;
}
SimField& SimField::operator-=(const SimField& o) {
  for (int c = 0; c < ncomp_; ++c)
    for (std::size_t i = 0; i < comp_[c].size(); ++i) comp_[c][i] -= o.comp_[c][i];
  return *this;
}
SimField& SimField::operator*=(double s) {
  for (auto& v : comp_)
    for (auto& z : v) z *= s;
  return *this;
}
SimField SimField::operator-(const SimField& o) const {
  SimField r = *this;
  r -= o;
  return r;
}
void SimField::zero() {
  for (auto& v : comp_)
    std::fill(v.begin(), v.end(), std::complex<double>(0.0, 0.0));
}
double SimField::max_abs() const {
  double m = 0.0;
  for (const auto& v : comp_)
    for (const auto& z : v) m = std::max(m, std::abs(z));
  return m;
}

namespace {

struct Scratch {
  std::vector<double> phys;
  std::vector<std::complex<double>> spec;
};

void to_phys(const SimField& f, int c, std::vector<double>& out,
             std::vector<std::complex<double>>& scratch) {
  scratch = f.spectrum(c);  // c2r destroys its input
  out.resize(static_cast<std::size_t>(f.M()) * f.M() * f.M());
  fft3::backward_c2r(f.M(), scratch.data(), out.data());
}

void to_spec(const std::vector<double>& phys, SimField& f, int c) {
  fft3::forward_r2c(f.M(), phys.data(), f.spectrum(c).data());
  double inv = 1.0 / (static_cast<double>(f.M()) * f.M() * f.M());
  for (auto& z : f.spectrum(c)) z *= inv;
}

// zero every mode with any |n_i| beyond the dealias cutoff (or on the Nyquist
// planes, which carry no conjugate partner)
void dealias(SimField& f, const TorusSpec& spec) {
  int keep = spec.keep_max();
  int M = f.M(), nzc = f.nz();
  for (int c = 0; c < f.ncomp(); ++c)
    for (int ix = 0; ix < M; ++ix) {
      int nx = f.freq_of(ix);
      for (int iy = 0; iy < M; ++iy) {
        int ny = f.freq_of(iy);
        bool kill_xy = std::abs(nx) > keep || std::abs(ny) > keep || nx == -M / 2 ||
                       ny == -M / 2;
        for (int iz = 0; iz < nzc; ++iz)
          if (kill_xy || iz > keep) f.at(c, ix, iy, iz) = {0.0, 0.0};
      }
    }
}

// |D|^{-2} grad div: X -> -xi (xi . X)/|xi|^2, zero mode untouched (zero)
void rdiv_inplace(SimField& x) {
  int M = x.M(), nzc = x.nz();
  double L = x.L();
  for (int ix = 0; ix < M; ++ix)
    for (int iy = 0; iy < M; ++iy)
      for (int iz = 0; iz < nzc; ++iz) {
        double k1 = x.freq_of(ix) / L, k2 = x.freq_of(iy) / L, k3 = iz / L;
        double r2 = k1 * k1 + k2 * k2 + k3 * k3;
        if (r2 == 0.0) {
          for (int c = 0; c < 3; ++c) x.at(c, ix, iy, iz) = {0.0, 0.0};
          continue;
        }
        std::complex<double> dot =
            k1 * x.at(0, ix, iy, iz) + k2 * x.at(1, ix, iy, iz) + k3 * x.at(2, ix, iy, iz);
        std::complex<double> f = -dot / r2;
        x.at(0, ix, iy, iz) = k1 * f;
        x.at(1, ix, iy, iz) = k2 * f;
        x.at(2, ix, iy, iz) = k3 * f;
      }
}

// Leray projection: u -> u - xi (xi.u)/|xi|^2 for xi != 0
void leray_project(SimField& u) {
  int M = u.M(), nzc = u.nz();
  double L = u.L();
  for (int ix = 0; ix < M; ++ix)
    for (int iy = 0; iy < M; ++iy)
      for (int iz = 0; iz < nzc; ++iz) {
        double k1 = u.freq_of(ix) / L, k2 = u.freq_of(iy) / L, k3 = iz / L;
        double r2 = k1 * k1 + k2 * k2 + k3 * k3;
        if (r2 == 0.0) continue;
        std::complex<double> dot =
            k1 * u.at(0, ix, iy, iz) + k2 * u.at(1, ix, iy, iz) + k3 * u.at(2, ix, iy, iz);
        std::complex<double> f = dot / r2;
        u.at(0, ix, iy, iz) -= k1 * f;
        u.at(1, ix, iy, iz) -= k2 * f;
        u.at(2, ix, iy, iz) -= k3 * f;
      }
}

double divergence_rel(const SimField& u) {
  int M = u.M(), nzc = u.nz();
  double L = u.L();
  double worst = 0.0, peak = 0.0;
  for (int ix = 0; ix < M; ++ix)
    for (int iy = 0; iy < M; ++iy)
      for (int iz = 0; iz < nzc; ++iz) {
        double k1 = u.freq_of(ix) / L, k2 = u.freq_of(iy) / L, k3 = iz / L;
        std::complex<double> dot =
            k1 * u.at(0, ix, iy, iz) + k2 * u.at(1, ix, iy, iz) + k3 * u.at(2, ix, iy, iz);
        double kn = std::sqrt(k1 * k1 + k2 * k2 + k3 * k3);
        for (int c = 0; c < 3; ++c)
          peak = std::max(peak, kn * std::abs(u.at(c, ix, iy, iz)));
        worst = std::max(worst, std::abs(dot));
      }
  return peak == 0.0 ? 0.0 : worst / peak;
}

// physical product of two spectra, dealiased result into out[c]
void product_into(const std::vector<double>& fa, const std::vector<double>& fb,
                  SimField& out, int c, const TorusSpec& spec,
                  std::vector<double>& scratch) {
  scratch.resize(fa.size());
  for (std::size_t i = 0; i < fa.size(); ++i) scratch[i] = fa[i] * fb[i];
  to_spec(scratch, out, c);
  dealias(out, spec);
}

double l2_norm(const SimField& f) {
  double acc = 0.0;
  for (int c = 0; c < f.ncomp(); ++c)
    for (const auto& z : f.spectrum(c)) acc += std::norm(z);
  return std::sqrt(acc);
}

struct RhsWork {
  SimField rhs_a, rhs_u;
  SimField grad_p, grad_pi;
  StepDiagnostics diag;
  double max_u_phys = 0.0;
};

// nonlinear terms used by the pressure equations
struct NonlinearTerms {
  SimField div_uu;    // div(u (x) u) = u . grad u (spectral, dealiased)
  SimField a_lap_u;   // a lap u
  SimField r_alap;    // |D|^{-2} grad div (a lap u)
  std::vector<double> a_phys;
  double max_u = 0.0;
};

NonlinearTerms build_nonlinear(const SimState& st) {
  const TorusSpec& spec = st.spec;
  NonlinearTerms nt{SimField(spec, 3), SimField(spec, 3), SimField(spec, 3), {}, 0.0};
  std::vector<std::complex<double>> cs;
  std::vector<double> up[3], scratch;
  for (int c = 0; c < 3; ++c) {
    to_phys(st.u, c, up[c], cs);
    for (double v : up[c]) nt.max_u = std::max(nt.max_u, std::fabs(v));
  }
  to_phys(st.a, 0, nt.a_phys, cs);

  // u (x) u -> divergence (conservative form)
  SimField uu(spec, 1);
  int M = spec.M;
  double L = spec.L;
  for (int ci = 0; ci < 3; ++ci) {
    SimField rows(spec, 3);
    for (int cj = 0; cj < 3; ++cj) product_into(up[ci], up[cj], rows, cj, spec, scratch);
    // div over j
    for (int ix = 0; ix < M; ++ix)
      for (int iy = 0; iy < M; ++iy)
        for (int iz = 0; iz < spec.M / 2 + 1; ++iz) {
          double k1 = rows.freq_of(ix) / L, k2 = rows.freq_of(iy) / L, k3 = iz / L;
          std::complex<double> d = std::complex<double>(0.0, 1.0) *
                                   (k1 * rows.at(0, ix, iy, iz) + k2 * rows.at(1, ix, iy, iz) +
                                    k3 * rows.at(2, ix, iy, iz));
          nt.div_uu.at(ci, ix, iy, iz) = d;
        }
  }
  (void)uu;

  // lap u in physical space, times a
  std::vector<double> lap_phys;
  SimField lap(spec, 3);
  for (int c = 0; c < 3; ++c) {
    lap.spectrum(c) = st.u.spectrum(c);
    for (int ix = 0; ix < M; ++ix)
      for (int iy = 0; iy < M; ++iy)
        for (int iz = 0; iz < spec.M / 2 + 1; ++iz) {
          double k1 = lap.freq_of(ix) / L, k2 = lap.freq_of(iy) / L, k3 = iz / L;
          lap.at(c, ix, iy, iz) *= -(k1 * k1 + k2 * k2 + k3 * k3);
        }
    to_phys(lap, c, lap_phys, cs);
    product_into(nt.a_phys, lap_phys, nt.a_lap_u, c, spec, scratch);
  }
  nt.r_alap = nt.a_lap_u;
  rdiv_inplace(nt.r_alap);
  return nt;
}

PressureResult pressure_fixed_point(const SimState& st, const NonlinearTerms& nt,
                                    PressureMode mode, const SimField* warm) {
  const TorusSpec& spec = st.spec;
  SimField G(spec, 3);
  switch (mode) {
    case PressureMode::P: {
      G = nt.div_uu;
      rdiv_inplace(G);
      SimField t2 = nt.r_alap;
      t2 *= st.mu;
      G -= t2;
      break;
    }
    case PressureMode::PI: {
      // - mu Rdiv(a Rdiv(a lap u)) + Rdiv(u . grad u)
      G = nt.div_uu;
      rdiv_inplace(G);
      SimField inner = nt.r_alap;  // Rdiv(a lap u)
      SimField prod(spec, 3);
      std::vector<std::complex<double>> cs;
      std::vector<double> ph, scratch;
      for (int c = 0; c < 3; ++c) {
        to_phys(inner, c, ph, cs);
        product_into(nt.a_phys, ph, prod, c, spec, scratch);
      }
      rdiv_inplace(prod);
      prod *= st.mu;
      G -= prod;
      break;
    }
    case PressureMode::PI1: {
      SimField inner = nt.r_alap;
      SimField prod(spec, 3);
      std::vector<std::complex<double>> cs;
      std::vector<double> ph, scratch;
      for (int c = 0; c < 3; ++c) {
        to_phys(inner, c, ph, cs);
        product_into(nt.a_phys, ph, prod, c, spec, scratch);
      }
      rdiv_inplace(prod);
      prod *= st.mu;
      SimField adv = nt.div_uu;
      rdiv_inplace(adv);  // Rdiv(u . grad u)
      SimField prod2(spec, 3);
      for (int c = 0; c < 3; ++c) {
        to_phys(adv, c, ph, cs);
        product_into(nt.a_phys, ph, prod2, c, spec, scratch);
      }
      rdiv_inplace(prod2);
      G = prod2;
      G -= prod;
      break;
    }
  }

  PressureResult res{SimField(spec, 3), 0, 0.0, 0.0};
  SimField X = warm ? *warm : G;
  double prev_diff = -1.0;
  std::vector<std::complex<double>> cs;
  std::vector<double> ph, scratch;
  double g_scale = l2_norm(G);
  if (g_scale == 0.0) {
    res.grad = G;
    return res;
  }
  for (int it = 0; it < 200; ++it) {
    SimField ax(spec, 3);
    for (int c = 0; c < 3; ++c) {
      to_phys(X, c, ph, cs);
      product_into(nt.a_phys, ph, ax, c, spec, scratch);
    }
    rdiv_inplace(ax);
    ax += G;
    SimField diff = ax - X;
    double dn = l2_norm(diff);
    double xn = l2_norm(ax);
    X = std::move(ax);
    res.iterations = it + 1;
    res.residual = xn == 0.0 ? 0.0 : dn / xn;
    if (prev_diff > 0.0 && dn > 0.0) res.contraction = dn / prev_diff;
    prev_diff = dn;
    if (res.residual < 1e-11) break;
    if (it > 4 && res.contraction >= 0.9)
      throw std::runtime_error(
          "pressure_solve: fixed point is not a contraction (estimated radius " +
          std::to_string(res.contraction) + ")");
  }
  res.grad = std::move(X);
  return res;
}

RhsWork eval_rhs(SimState& st, const SimField* warm_p) {
  const TorusSpec& spec = st.spec;
  RhsWork w{SimField(spec, 1), SimField(spec, 3), SimField(spec, 3), SimField(spec, 3), {}, 0.0};
  NonlinearTerms nt = build_nonlinear(st);
  w.max_u_phys = nt.max_u;

  // transport: rhs_a = -div(u a)
  std::vector<std::complex<double>> cs;
  std::vector<double> ph, scratch;
  SimField ua(spec, 3);
  for (int c = 0; c < 3; ++c) {
    to_phys(st.u, c, ph, cs);
    product_into(ph, nt.a_phys, ua, c, spec, scratch);
  }
  int M = spec.M;
  double L = spec.L;
  for (int ix = 0; ix < M; ++ix)
    for (int iy = 0; iy < M; ++iy)
      for (int iz = 0; iz < M / 2 + 1; ++iz) {
        double k1 = ua.freq_of(ix) / L, k2 = ua.freq_of(iy) / L, k3 = iz / L;
        w.rhs_a.at(0, ix, iy, iz) =
            -std::complex<double>(0.0, 1.0) *
            (k1 * ua.at(0, ix, iy, iz) + k2 * ua.at(1, ix, iy, iz) + k3 * ua.at(2, ix, iy, iz));
      }

  // pressure: mode P by fixed point; Pi by the defining identity
  PressureResult pres = pressure_fixed_point(st, nt, PressureMode::P, warm_p);
  w.grad_p = pres.grad;
  w.diag.pressure_iterations = pres.iterations;
  w.diag.pressure_residual = pres.residual;
  w.grad_pi = nt.r_alap;
  w.grad_pi *= st.mu;
  w.grad_pi += w.grad_p;

  // a grad P
  SimField a_gp(spec, 3);
  for (int c = 0; c < 3; ++c) {
    to_phys(w.grad_p, c, ph, cs);
    product_into(nt.a_phys, ph, a_gp, c, spec, scratch);
  }

  // rhs_u = -u.grad u - grad Pi - a grad P + mu a lap u + mu Rdiv(a lap u)
  w.rhs_u = nt.div_uu;
  w.rhs_u *= -1.0;
  w.rhs_u -= w.grad_pi;
  w.rhs_u -= a_gp;
  SimField visc = nt.a_lap_u;
  visc *= st.mu;
  w.rhs_u += visc;
  SimField rv = nt.r_alap;
  rv *= st.mu;
  w.rhs_u += rv;
  dealias(w.rhs_u, spec);
  dealias(w.rhs_a, spec);
  return w;
}

void apply_heat(SimField& u, double mu, double dt) {
  int M = u.M(), nzc = u.nz();
  double L = u.L();
  for (int c = 0; c < u.ncomp(); ++c)
    for (int ix = 0; ix < M; ++ix)
      for (int iy = 0; iy < M; ++iy)
        for (int iz = 0; iz < nzc; ++iz) {
          double k1 = u.freq_of(ix) / L, k2 = u.freq_of(iy) / L, k3 = iz / L;
          u.at(c, ix, iy, iz) *= std::exp(-mu * dt * (k1 * k1 + k2 * k2 + k3 * k3));
        }
}

}  // namespace

PressureResult pressure_solve(const SimState& state, PressureMode mode,
                              const SimField* warm_start) {
  NonlinearTerms nt = build_nonlinear(state);
  return pressure_fixed_point(state, nt, mode, warm_start);
}

PeriodizeResult periodize(const DataFamily& data, const TorusSpec& spec, double amp_scale) {
  PeriodizeResult out{SimField(spec, 1), SimField(spec, 3), 0.0, 0.0};
  GridField ga = bump_to_grid(data.a0, spec.M, spec.L);
  GridField gu = bump_to_grid(data.u0, spec.M, spec.L);
  int keep = spec.keep_max();
  double rmax_a = ga.max_spectrum_radius();
  double rmax_u = gu.max_spectrum_radius();
  if (std::max(rmax_a, rmax_u) * spec.L > keep)
    throw std::invalid_argument("periodize: data support exceeds the dealias cutoff");

  auto fold = [&](const GridField& g, SimField& f) {
    int M = spec.M;
    for (int c = 0; c < g.ncomp(); ++c)
      for (int ix = 0; ix < M; ++ix)
        for (int iy = 0; iy < M; ++iy)
          for (int iz = 0; iz <= M / 2; ++iz) {
            auto v = g.at(c, ix, iy, iz);
            f.at(c, ix, iy, iz) = v * amp_scale;
          }
  };
  fold(ga, out.a);
  fold(gu, out.u);
  leray_project(out.u);

  std::vector<std::complex<double>> cs;
  std::vector<double> ph;
  to_phys(out.a, 0, ph, cs);
  for (double v : ph) out.a_linf = std::max(out.a_linf, std::fabs(v));
  std::vector<double> mag2(ph.size(), 0.0);
  for (int c = 0; c < 3; ++c) {
    to_phys(out.u, c, ph, cs);
    for (std::size_t i = 0; i < ph.size(); ++i) mag2[i] += ph[i] * ph[i];
  }
  for (double v : mag2) out.u_linf = std::max(out.u_linf, std::sqrt(v));
  return out;
}

void step(SimState& state, double dt) {
  const TorusSpec& spec = state.spec;
  StepDiagnostics diag;

  // stage 1
  RhsWork k1 = eval_rhs(state, nullptr);
  double dx = 2.0 * M_PI * spec.L / spec.M;
  diag.cfl = k1.max_u_phys * dt / dx;
  if (diag.cfl > 0.5)
    throw std::runtime_error("step: advective CFL " + std::to_string(diag.cfl) + " > 0.5");
  diag.pressure_iterations = k1.diag.pressure_iterations;
  diag.pressure_residual = k1.diag.pressure_residual;

  SimState mid = state;
  mid.a.spectrum(0) = state.a.spectrum(0);
  for (std::size_t i = 0; i < mid.a.spectrum(0).size(); ++i)
    mid.a.spectrum(0)[i] += dt * k1.rhs_a.spectrum(0)[i];
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < mid.u.spectrum(c).size(); ++i)
      mid.u.spectrum(c)[i] = state.u.spectrum(c)[i] + dt * k1.rhs_u.spectrum(c)[i];
  apply_heat(mid.u, state.mu, dt);
  leray_project(mid.u);
  mid.t = state.t + dt;

  // stage 2
  RhsWork k2 = eval_rhs(mid, &k1.grad_p);

  // combine: u_{n+1} = E u_n + dt/2 (E k1 + k2), a_{n+1} = a_n + dt/2 (k1 + k2)
  SimField eu = state.u;
  apply_heat(eu, state.mu, dt);
  SimField ek1 = k1.rhs_u;
  apply_heat(ek1, state.mu, dt);
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < state.u.spectrum(c).size(); ++i)
      state.u.spectrum(c)[i] =
          eu.spectrum(c)[i] +
          0.5 * dt * (ek1.spectrum(c)[i] + k2.rhs_u.spectrum(c)[i]);
  for (std::size_t i = 0; i < state.a.spectrum(0).size(); ++i)
    state.a.spectrum(0)[i] +=
        0.5 * dt * (k1.rhs_a.spectrum(0)[i] + k2.rhs_a.spectrum(0)[i]);
  leray_project(state.u);
  dealias(state.u, spec);
  dealias(state.a, spec);
  state.t += dt;

  diag.divergence = divergence_rel(state.u);

  // pressure-mode consistency at the accepted state: the Pi and Pi1 fixed
  // points must match their defining identities
  {
    NonlinearTerms nt = build_nonlinear(state);
    PressureResult p = pressure_fixed_point(state, nt, PressureMode::P, &k2.grad_p);
    SimField pi_id = nt.r_alap;
    pi_id *= state.mu;
    pi_id += p.grad;
    PressureResult pi = pressure_fixed_point(state, nt, PressureMode::PI, &pi_id);
    SimField d1 = pi.grad - pi_id;
    double rel1 = l2_norm(pi_id) == 0.0 ? 0.0 : l2_norm(d1) / l2_norm(pi_id);

    SimField adv = nt.div_uu;
    rdiv_inplace(adv);
    SimField pi1_id = pi_id;
    pi1_id -= adv;
    PressureResult pi1 = pressure_fixed_point(state, nt, PressureMode::PI1, &pi1_id);
    SimField d2 = pi1.grad - pi1_id;
    double rel2 = l2_norm(pi1_id) == 0.0 ? 0.0 : l2_norm(d2) / l2_norm(pi1_id);
    diag.mode_consistency = std::max(rel1, rel2);
  }
  state.history.push_back(diag);
}

namespace {

SimField heat_flow_from(const PeriodizeResult& pr, double mu, double t) {
  SimField u = pr.u;
  apply_heat(u, mu, t);
  return u;
}

SimField u1_from_periodized(const PeriodizeResult& pr, const TorusSpec& spec, double t,
                            double mu);

}  // namespace

SimField heat_flow_u0(const DataFamily& data, const TorusSpec& spec, double t,
                      double amp_scale) {
  PeriodizeResult pr = periodize(data, spec, amp_scale);
  return heat_flow_from(pr, data.params.mu, t);
}

SimField u1_exact_on_grid(const DataFamily& data, const TorusSpec& spec, double t,
                          double amp_scale) {
  PeriodizeResult pr = periodize(data, spec, amp_scale);
  return u1_from_periodized(pr, spec, t, data.params.mu);
}

namespace {

SimField u1_from_periodized(const PeriodizeResult& pr, const TorusSpec& spec, double t,
                            double mu) {
  SimField out(spec, 3);
  int M = spec.M;
  double L = spec.L;
  int keep = spec.keep_max();

  // sparse mode lists
  struct Mode {
    int n[3];
    std::complex<double> v;
  };
  std::vector<Mode> amodes;
  std::vector<std::array<std::complex<double>, 3>> uvals;
  std::vector<std::array<int, 3>> unx;
  for (int ix = 0; ix < M; ++ix)
    for (int iy = 0; iy < M; ++iy)
      for (int iz = 0; iz <= M / 2; ++iz) {
        auto va = pr.a.at(0, ix, iy, iz);
        bool nz_half = iz > 0;  // half-spectrum stores only kz >= 0
        if (va != std::complex<double>(0.0, 0.0)) {
          amodes.push_back({{pr.a.freq_of(ix), pr.a.freq_of(iy), iz}, va});
          if (nz_half)
            amodes.push_back({{-pr.a.freq_of(ix), -pr.a.freq_of(iy), -iz}, std::conj(va)});
        }
        std::array<std::complex<double>, 3> vu{pr.u.at(0, ix, iy, iz), pr.u.at(1, ix, iy, iz),
                                               pr.u.at(2, ix, iy, iz)};
        if (vu[0] != std::complex<double>(0.0, 0.0) ||
            vu[1] != std::complex<double>(0.0, 0.0) ||
            vu[2] != std::complex<double>(0.0, 0.0)) {
          unx.push_back({pr.u.freq_of(ix), pr.u.freq_of(iy), iz});
          uvals.push_back(vu);
          if (nz_half) {
            unx.push_back({-pr.u.freq_of(ix), -pr.u.freq_of(iy), -iz});
            uvals.push_back({std::conj(vu[0]), std::conj(vu[1]), std::conj(vu[2])});
          }
        }
      }

  for (const auto& am : amodes)
    for (std::size_t j = 0; j < unx.size(); ++j) {
      int n1 = am.n[0] + unx[j][0], n2 = am.n[1] + unx[j][1], n3 = am.n[2] + unx[j][2];
      if (std::abs(n1) > keep || std::abs(n2) > keep || std::abs(n3) > keep) continue;
      if (n3 < 0) continue;  // half-spectrum output; conjugates implied
      double e1 = unx[j][0] / L, e2 = unx[j][1] / L, e3 = unx[j][2] / L;
      double eta2 = e1 * e1 + e2 * e2 + e3 * e3;
      double x1 = n1 / L, x2c = n2 / L, x3 = n3 / L;
      double xi2 = x1 * x1 + x2c * x2c + x3 * x3;
      double A = aa_kernel(t, xi2, eta2, mu);
      std::complex<double> base[3];
      for (int c = 0; c < 3; ++c)
        base[c] = mu * am.v * (-eta2) * uvals[j][c] * A;
      // Leray row: P(xi) base
      std::complex<double> dot = x1 * base[0] + x2c * base[1] + x3 * base[2];
      int ix = out.index_of_freq(n1), iy = out.index_of_freq(n2);
      if (xi2 > 0.0) {
        out.at(0, ix, iy, n3) += base[0] - x1 * dot / xi2;
        out.at(1, ix, iy, n3) += base[1] - x2c * dot / xi2;
        out.at(2, ix, iy, n3) += base[2] - x3 * dot / xi2;
      } else {
        for (int c = 0; c < 3; ++c) out.at(c, ix, iy, n3) += base[c];
      }
    }
  return out;
}

}  // namespace

std::map<int, double> block_lp_norms(const SimField& f, const DyadicProfile& prof, double p) {
  std::map<int, double> out;
  int M = f.M(), nzc = f.nz();
  double L = f.L();
  // block range from the spectrum support
  double rmin = kInf, rmax = 0.0;
  for (int c = 0; c < f.ncomp(); ++c)
    for (int ix = 0; ix < M; ++ix)
      for (int iy = 0; iy < M; ++iy)
        for (int iz = 0; iz < nzc; ++iz) {
          if (f.at(c, ix, iy, iz) == std::complex<double>(0.0, 0.0)) continue;
          double k1 = f.freq_of(ix) / L, k2 = f.freq_of(iy) / L, k3 = iz / L;
          double r = std::sqrt(k1 * k1 + k2 * k2 + k3 * k3);
          if (r > 0) {
            rmin = std::min(rmin, r);
            rmax = std::max(rmax, r);
          }
        }
  if (rmax == 0.0) return out;
  int j_lo = static_cast<int>(std::floor(std::log2(rmin / DyadicProfile::kSupportHi)));
  int j_hi = static_cast<int>(std::ceil(std::log2(rmax / DyadicProfile::kSupportLo)));

  for (int j = j_lo; j <= j_hi; ++j) {
    // smallest power-of-two sublattice holding the block support
    int nmax = static_cast<int>(std::ceil(DyadicProfile::kSupportHi * std::exp2(double(j)) * L));
    if (nmax > M / 2) nmax = M / 2;
    int Msub = 8;
    while (Msub / 2 - 1 < nmax && Msub < M) Msub *= 2;
    TorusSpec sub{Msub, L, 1.0};
    SimField blk(sub, f.ncomp());
    bool any = false;
    double s = std::exp2(static_cast<double>(-j));
    for (int c = 0; c < f.ncomp(); ++c)
      for (int ix = 0; ix < M; ++ix) {
        int nx = f.freq_of(ix);
        if (std::abs(nx) > Msub / 2 - 1) continue;
        for (int iy = 0; iy < M; ++iy) {
          int ny = f.freq_of(iy);
          if (std::abs(ny) > Msub / 2 - 1) continue;
          for (int iz = 0; iz < std::min(nzc, Msub / 2); ++iz) {
            auto v = f.at(c, ix, iy, iz);
            if (v == std::complex<double>(0.0, 0.0)) continue;
            double k1 = nx / L, k2 = ny / L, k3 = iz / L;
            double ph = prof.phi(s * std::sqrt(k1 * k1 + k2 * k2 + k3 * k3));
            if (ph == 0.0) continue;
            blk.at(c, blk.index_of_freq(nx), blk.index_of_freq(ny), iz) = v * ph;
            any = true;
          }
        }
      }
    if (!any) continue;
    // L^p on the sublattice
    std::vector<std::complex<double>> cs;
    std::vector<double> ph;
    std::vector<double> mag2(static_cast<std::size_t>(Msub) * Msub * Msub, 0.0);
    for (int c = 0; c < f.ncomp(); ++c) {
      to_phys(blk, c, ph, cs);
      for (std::size_t i = 0; i < ph.size(); ++i) mag2[i] += ph[i] * ph[i];
    }
    double dV = std::pow(2.0 * M_PI * L / Msub, 3.0);
    double val;
    if (p == kInf) {
      double m = 0.0;
      for (double v : mag2) m = std::max(m, v);
      val = std::sqrt(m);
    } else {
      double acc = 0.0;
      for (double v : mag2) acc += std::pow(v, 0.5 * p);
      val = std::pow(acc * dV, 1.0 / p);
    }
    if (val > 0.0) out[j] = val;
  }
  return out;
}

namespace {

double besov_of_blocks(const std::map<int, double>& blocks, double s, double r) {
  std::map<int, double> weighted;
  for (const auto& [j, v] : blocks) weighted[j] = std::exp2(s * j) * v;
  return accumulate_blocks(weighted, r).value;
}

}  // namespace

ProbeRatios run_probe(const DataFamily& data, const ProbeConfig& cfg) {
  const ParamSet& ps = data.params;
  if (ps.k0 < 4 || ps.N > 9)
    throw std::invalid_argument("run_probe: expects a small-frequency configuration");
  DyadicProfile prof = make_dyadic_profile();
  double T0 = ps.t0();

  ProbeRatios out;
  double amp = cfg.amp_scale;
  if (amp <= 0.0) {
    PeriodizeResult probe_amp = periodize(data, cfg.spec, 1.0);
    amp = std::min(1.0, 0.25 / probe_amp.a_linf);
  }
  out.amp_scale = amp;

  PeriodizeResult init = periodize(data, cfg.spec, amp);
  SimState st;
  st.spec = cfg.spec;
  st.a = init.a;
  st.u = init.u;
  st.mu = ps.mu;
  st.mode = cfg.mode;

  double dt = T0 / cfg.substeps;
  const double i3q = rat_d(ps.q.three_over());
  double qv = rat_d(ps.q.v);
  BesovIndex lo_idx{i3q - 1.0, qv, 1.0};
  BesovIndex hi_idx{i3q + 1.0, qv, 1.0};
  BesovIndex x_idx = data.regime == Regime::THM1
                         ? BesovIndex{rat_d(ps.p0->three_over()), rat_d(ps.p0->v), 1.0}
                         : BesovIndex{0.5, 6.0, 1.0};

  TimeSeriesNorm u2_series, a1_series;
  u2_series.dt = dt * cfg.record_every;
  a1_series.dt = dt * cfg.record_every;

  auto record = [&]() {
    SimField U0 = heat_flow_from(init, ps.mu, st.t);
    SimField U1 = u1_from_periodized(init, cfg.spec, st.t, ps.mu);
    SimField U2 = st.u;
    U2 -= U0;
    U2 -= U1;
    u2_series.values.push_back(block_lp_norms(U2, prof, qv));
    SimField a1 = st.a;
    a1 -= init.a;
    a1_series.values.push_back(block_lp_norms(a1, prof, x_idx.p));
  };

  record();
  for (int s = 0; s < cfg.substeps; ++s) {
    step(st, dt);
    if ((s + 1) % cfg.record_every == 0 || s + 1 == cfg.substeps) record();
  }

  for (const auto& d : st.history) {
    out.max_divergence = std::max(out.max_divergence, d.divergence);
    out.max_mode_inconsistency = std::max(out.max_mode_inconsistency, d.mode_consistency);
  }

  CheminLernerResult y_lo = chemin_lerner_norm(u2_series, lo_idx, kInf);
  CheminLernerResult y_hi = chemin_lerner_norm(u2_series, hi_idx, 1.0);
  CheminLernerResult x_cl = chemin_lerner_norm(a1_series, x_idx, kInf);
  out.y_surrogate = y_lo.value + y_hi.value;
  out.x_surrogate = x_cl.value;
  out.dt_unstable = y_hi.dt_unstable;

  SimField U1 = u1_from_periodized(init, cfg.spec, T0, ps.mu);
  out.u1_norm = besov_of_blocks(block_lp_norms(U1, prof, qv), lo_idx.s, lo_idx.r);
  out.a0_norm = besov_of_blocks(block_lp_norms(init.a, prof, x_idx.p), x_idx.s, x_idx.r);
  out.y_ratio = out.u1_norm == 0.0 ? 0.0 : out.y_surrogate / out.u1_norm;
  out.x_ratio = out.a0_norm == 0.0 ? 0.0 : out.x_surrogate / out.a0_norm;

  // closing inequality in the inflation space
  BesovIndex infl = data.regime == Regime::THM1
                        ? BesovIndex{-0.5, 6.0, 1.0}
                        : BesovIndex{rat_d(ps.p.three_over()) - 1.0,
                                     ps.p.is_inf ? kInf : rat_d(ps.p.v), 1.0};
  SimField U0T = heat_flow_from(init, ps.mu, T0);
  double u_norm = besov_of_blocks(block_lp_norms(st.u, prof, infl.p), infl.s, infl.r);
  double u0_norm = besov_of_blocks(block_lp_norms(U0T, prof, infl.p), infl.s, infl.r);
  double u1_infl = besov_of_blocks(block_lp_norms(U1, prof, infl.p), infl.s, infl.r);
  double y_infl = besov_of_blocks(block_lp_norms([&] {
                                    SimField U2 = st.u;
                                    U2 -= U0T;
                                    U2 -= U1;
                                    return U2;
                                  }(),
                                                 prof, infl.p),
                                  infl.s, infl.r);
  out.final_u_norm = u_norm;
  out.u0_heat_norm = u0_norm;
  out.final_inequality = u_norm >= u1_infl - u0_norm - y_infl && u_norm > 0.0;
  return out;
}

}  // namespace niflab
