#include "niflab/fft3.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace niflab::fft3 {

namespace {

std::mutex g_plan_mutex;

struct PlanSet {
  fftw_plan fwd_c2c = nullptr;
  fftw_plan bwd_c2c = nullptr;
  fftw_plan fwd_r2c = nullptr;
  fftw_plan bwd_c2r = nullptr;
};

PlanSet& plans_for(int M) {
  static std::map<int, PlanSet> cache;
  auto it = cache.find(M);
  if (it != cache.end()) return it->second;

  PlanSet ps;
  // plan with scratch buffers; execution later uses the new-array interface
  std::size_t n3 = static_cast<std::size_t>(M) * M * M;
  std::size_t nc = static_cast<std::size_t>(M) * M * (M / 2 + 1);
  fftw_complex* a = fftw_alloc_complex(n3);
  fftw_complex* b = fftw_alloc_complex(n3);
  double* r = fftw_alloc_real(n3);
  fftw_complex* h = fftw_alloc_complex(nc);
  ps.fwd_c2c = fftw_plan_dft_3d(M, M, M, a, b, FFTW_FORWARD, FFTW_ESTIMATE);
  ps.bwd_c2c = fftw_plan_dft_3d(M, M, M, a, b, FFTW_BACKWARD, FFTW_ESTIMATE);
  ps.fwd_r2c = fftw_plan_dft_r2c_3d(M, M, M, r, h, FFTW_ESTIMATE);
  ps.bwd_c2r = fftw_plan_dft_c2r_3d(M, M, M, h, r, FFTW_ESTIMATE);
  fftw_free(a);
  fftw_free(b);
  fftw_free(r);
  fftw_free(h);
  if (!ps.fwd_c2c || !ps.bwd_c2c || !ps.fwd_r2c || !ps.bwd_c2r)
    throw std::runtime_error("fftw planning failed");
  return cache.emplace(M, ps).first->second;
}

}  // namespace

void forward_c2c(int M, const std::complex<double>* in, std::complex<double>* out) {
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    p = plans_for(M).fwd_c2c;
  }
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void backward_c2c(int M, const std::complex<double>* in, std::complex<double>* out) {
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    p = plans_for(M).bwd_c2c;
  }
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

void forward_r2c(int M, const double* in, std::complex<double>* out) {
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    p = plans_for(M).fwd_r2c;
  }
  fftw_execute_dft_r2c(p, const_cast<double*>(in), reinterpret_cast<fftw_complex*>(out));
}

void backward_c2r(int M, std::complex<double>* in, double* out) {
  fftw_plan p;
  {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    p = plans_for(M).bwd_c2r;
  }
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(in), out);
}

}  // namespace niflab::fft3
