#pragma once

#include <optional>
#include <string>
#include <vector>

#include "niflab/besov.hpp"
#include "niflab/initial_data.hpp"

namespace niflab {

// Periodization box [0, 2 pi L)^3 with an M^3 lattice; frequencies n / L.
struct TorusSpec {
  int M = 128;
  double L = 0.25;
  double dealias_fraction = 2.0 / 3.0;

  int keep_max() const {  // largest lattice index kept by the dealias mask
    return static_cast<int>(dealias_fraction * (M / 2)) - 1;
  }
};

// Real scalar or vector field in the half-spectrum (r2c) layout.
class SimField {
 public:
  SimField() = default;
  SimField(const TorusSpec& spec, int ncomp);

  int M() const { return M_; }
  double L() const { return L_; }
  int ncomp() const { return ncomp_; }
  int nz() const { return M_ / 2 + 1; }
  std::size_t spec_size() const { return static_cast<std::size_t>(M_) * M_ * nz(); }

  std::complex<double>& at(int c, int ix, int iy, int iz) {
    return comp_[c][(static_cast<std::size_t>(ix) * M_ + iy) * nz() + iz];
  }
  const std::complex<double>& at(int c, int ix, int iy, int iz) const {
    return comp_[c][(static_cast<std::size_t>(ix) * M_ + iy) * nz() + iz];
  }
  std::vector<std::complex<double>>& spectrum(int c) { return comp_[c]; }
  const std::vector<std::complex<double>>& spectrum(int c) const { return comp_[c]; }

  int freq_of(int i) const { return i <= M_ / 2 - 1 ? i : i - M_; }
  int index_of_freq(int n) const { return n >= 0 ? n : n + M_; }

  SimField& operator+=(const SimField& o);
  SimField& operator-=(const SimField& o);
  SimField& operator*=(double s);
  SimField operator-(const SimField& o) const;

  void zero();
  double max_abs() const;  // max spectral coefficient magnitude

 private:
  int M_ = 0;
  double L_ = 1.0;
  int ncomp_ = 0;
  std::vector<std::vector<std::complex<double>>> comp_;
};

enum class PressureMode { P, PI, PI1 };

struct PressureResult {
  SimField grad;        // the gradient field of the chosen pressure
  int iterations = 0;
  double residual = 0.0;
  double contraction = 0.0;  // estimated spectral radius of the fixed point
};

struct StepDiagnostics {
  double divergence = 0.0;         // max |xi . u| / max |u|
  double cfl = 0.0;                // advective dt max|u| / dx
  double pressure_residual = 0.0;
  int pressure_iterations = 0;
  double mode_consistency = 0.0;   // || grad Pi - (grad P + mu R(a lap u)) || rel
};

struct SimState {
  TorusSpec spec;
  SimField a;  // scalar
  SimField u;  // 3 components, divergence free
  double t = 0.0;
  double mu = 1.0;
  PressureMode mode = PressureMode::PI;
  std::vector<StepDiagnostics> history;
  TimeSeriesNorm u2_lo, u2_hi, a1_norms;  // probe histories (filled by run_probe)
};

// sample the bump data onto the lattice; rejects spectra beyond the dealias
// cutoff, reports the periodized sup-norm of a
struct PeriodizeResult {
  SimField a;
  SimField u;
  double a_linf = 0.0;
  double u_linf = 0.0;
};
PeriodizeResult periodize(const DataFamily& data, const TorusSpec& spec, double amp_scale = 1.0);

// fixed point for the chosen pressure mode; throws on non-contraction
PressureResult pressure_solve(const SimState& state, PressureMode mode,
                              const SimField* warm_start = nullptr);

// one IF-RK2 step; updates state in place and appends diagnostics
void step(SimState& state, double dt);

struct ProbeRatios {
  double y_surrogate = 0.0;        // ||U2|| in the low index + L1 high index
  double x_surrogate = 0.0;        // ||a1|| time-sup norm
  double u1_norm = 0.0;            // ||U1(T)|| probe norm (same index as Y)
  double a0_norm = 0.0;            // ||a0|| scale
  double y_ratio = 0.0, x_ratio = 0.0;
  double max_divergence = 0.0;
  double max_mode_inconsistency = 0.0;
  bool dt_unstable = false;
  double final_u_norm = 0.0;       // ||u(T)|| in the inflation space
  double u0_heat_norm = 0.0;       // ||U0(T)||
  bool final_inequality = false;   // ||u(T)|| >= ||U1|| - ||U0|| - Y > 0
  double amp_scale = 1.0;
};

struct ProbeConfig {
  TorusSpec spec;
  int substeps = 256;              // dt = T0 / substeps
  double amp_scale = 0.0;          // 0 = auto (clamp a0 sup to 0.25)
  PressureMode mode = PressureMode::PI;
  int record_every = 2;
};

ProbeRatios run_probe(const DataFamily& data, const ProbeConfig& cfg);

// exact heat flow of the data velocity at time t on the lattice
SimField heat_flow_u0(const DataFamily& data, const TorusSpec& spec, double t,
                      double amp_scale);

// exact first-order interaction field on the lattice at time t (mode sum with
// the closed-form tau integral), truncated to the dealias-kept modes
SimField u1_exact_on_grid(const DataFamily& data, const TorusSpec& spec, double t,
                          double amp_scale);

// block norms of a lattice field (vector magnitude across components)
std::map<int, double> block_lp_norms(const SimField& f, const DyadicProfile& prof, double p);

}  // namespace niflab
