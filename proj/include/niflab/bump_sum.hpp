#pragma once

#include <string>
#include <vector>

#include "niflab/besov.hpp"
#include "niflab/grid_field.hpp"
#include "niflab/profile.hpp"
#include "niflab/scaled.hpp"
#include "niflab/symbol.hpp"

namespace niflab {

// One shifted bump: coeff * sym(xi) * phi_hat(xi - center), optionally times
// the heat factor carried inside the symbols.  Spectral support is the ball
// of radius 2 about the center.
struct BumpTerm {
  std::array<double, 3> center{0, 0, 0};
  Scaled coeff;
  std::vector<SymbolPtr> sym;  // one per component
};

// A field that is a finite sum of frequency-shifted bumps; the exact carrier
// of the constructed initial data and of U_0 at arbitrary N.
struct BumpSum {
  int ncomp = 1;
  std::vector<BumpTerm> terms;
  PhiBump bump{canonical_step()};

  static BumpSum zero(int ncomp) {
    BumpSum f;
    f.ncomp = ncomp;
    return f;
  }

  // spectral evaluation (sum over terms whose support contains xi)
  std::vector<Scaled> eval_spectrum(const std::array<double, 3>& xi, double t = 0.0) const;

  BumpSum scaled_by(const Scaled& s) const;

  // structural realness: every term must have a conjugate partner at -center
  bool conjugate_symmetric(double tol = 1e-10) const;

  // serialization: one term per record (center, per-component sign, log2
  // amplitude, phase, symbol prefix expression)
  std::string serialize() const;
  static BumpSum deserialize(const std::string& text, const DyadicProfile* prof = nullptr);
};

// per-term symbol composition with a scalar multiplier; terms whose support
// touches the origin under a singular symbol are rejected (routed to
// quadrature-only paths by callers)
struct ApplyResult {
  BumpSum field;
  std::vector<std::size_t> quadrature_only;  // indices of flagged terms
};
ApplyResult apply_multiplier(const BumpSum& f, const SymbolPtr& m, bool singular_at_origin);

// matrix multiplier (3x3 of symbols) applied to a 3-component field
BumpSum apply_matrix_multiplier(const BumpSum& f,
                                const std::array<std::array<SymbolPtr, 3>, 3>& m);

// --- envelope machinery ---

struct EnvelopeNorm {
  Scaled value;
  bool is_bound = false;  // triangle-inequality fallback, not an exact value
};

// L^p norm of the block-j piece of f (terms whose center rounds to the dyadic
// level j): demodulate each center cluster, build the slowly varying envelope
// by FFT synthesis, take the coherent modulus; conjugate-paired clusters get
// the exact fast-phase average.  Profile filters, when wanted, enter through
// the terms' symbols (see dyadic_block below).
EnvelopeNorm envelope_lp_norm(const BumpSum& f, int j, double p);

struct BumpBesovResult {
  Scaled value;
  int j_lo = 0, j_hi = 0;
  bool is_bound = false;
  bool diverged = false;
};
BumpBesovResult besov_norm(const BumpSum& f, const DyadicProfile& prof, const BesovIndex& idx);

// Delta_j on a bump sum: attach the block profile to every surviving term
BumpSum dyadic_block(const BumpSum& f, const DyadicProfile& prof, int j);

// exact L^inf of a nonnegative-amplitude cosine family whose terms all peak at
// the origin; used for the data families where the triangle bound is attained
struct SupremumNorm {
  Scaled value;
  bool exact = false;
};
SupremumNorm linf_norm_aligned(const BumpSum& f);

// sample the bump sum onto a torus lattice (Poisson periodization convention:
// coefficient (2 pi L)^{-3} fhat(n/L)); used by grid oracles and the solver
GridField bump_to_grid(const BumpSum& f, int M, double L, double t = 0.0);

// envelope synthesis shared with the U_1 analysis: given samples of a spectrum
// g on an n^3 fftshifted grid of spacing h, accumulate physical |E|^2
// magnitudes on the dual grid (volume element dV)
struct EnvelopeSynth {
  std::vector<double> mag2;  // |E|^2 accumulated over components
  int n = 0;
  double dV = 0.0;
};
void envelope_accumulate(EnvelopeSynth& synth,
                         const std::vector<std::complex<double>>& g_samples);
EnvelopeSynth make_envelope_synth(int n, double h);
double envelope_lp_from_mag2(const EnvelopeSynth& synth, double p);

}  // namespace niflab
