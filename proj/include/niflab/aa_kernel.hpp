#pragma once

#include "niflab/scaled.hpp"

namespace niflab {

// A(t, xi2, eta2) = int_0^t exp(-mu*(xi2*(t-tau) + eta2*tau)) dtau
//                 = (exp(-mu*t*eta2) - exp(-mu*t*xi2)) / (mu*(xi2 - eta2))
// Positive and increasing in t; the equal-modulus limit is t*exp(-mu*t*xi2).
// The closed form cancels catastrophically when mu*t*|xi2-eta2| is small, so
// evaluation switches to the series branch below 1e-6.
double aa_kernel(double t, double xi2, double eta2, double mu);

// Same integral by Gauss-Legendre quadrature in tau; the independent oracle
// path (also used by the Monte-Carlo estimator, which must not touch the
// closed form).
double aa_tau_quadrature(double t, double xi2, double eta2, double mu, int n = 64);

// eta2 carried in extended-exponent form (|eta| ~ 2^k with k up to several
// hundred); xi2 stays an ordinary double (probe annulus scale).
Scaled aa_scaled(double t, double xi2, const Scaled& eta2, double mu);

// d/d(eta2) of the kernel, in the same extended form; needed where the two
// conjugate bump pairs nearly cancel and their difference has to be taken
// analytically.
Scaled aa_de2_scaled(double t, double xi2, const Scaled& eta2, double mu);

// psi(z) = (e^z - 1)/z and its derivatives, stable near 0
double psi_stable(double z);
double psi_prime_stable(double z);
double psi_second_stable(double z);

}  // namespace niflab
