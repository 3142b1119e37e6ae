#pragma once

#include <complex>
#include <vector>

namespace niflab {

// Thin FFTW wrappers for cubic 3D transforms.  Plans are created with
// FFTW_ESTIMATE (deterministic) and cached per grid size.
namespace fft3 {

// in-place-safe out-of-place complex transforms; unnormalized like FFTW
void forward_c2c(int M, const std::complex<double>* in, std::complex<double>* out);
void backward_c2c(int M, const std::complex<double>* in, std::complex<double>* out);

// real transforms with the half-spectrum layout M x M x (M/2+1)
void forward_r2c(int M, const double* in, std::complex<double>* out);
void backward_c2r(int M, std::complex<double>* in, double* out);  // destroys in

}  // namespace fft3

}  // namespace niflab
