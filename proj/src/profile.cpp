#include "niflab/profile.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

namespace niflab {

namespace {

// 16-point Gauss-Legendre on [-1,1]
constexpr int kGL = 16;
constexpr double kGLx[kGL] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr double kGLw[kGL] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

std::uint64_t hash64(const void* data, std::size_t n, std::uint64_t h = 1469598103934665603ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

double SmoothStep::weight(double x) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return std::exp(-1.0 / (x * (1.0 - x)));
}

namespace {

double weight_norm() {
  // integral of exp(-1/(x(1-x))) over [0,1] by composite Gauss-Legendre
  double acc = 0.0;
  const int panels = 64;
  for (int i = 0; i < panels; ++i) {
    double a = static_cast<double>(i) / panels, b = static_cast<double>(i + 1) / panels;
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int g = 0; g < kGL; ++g)
      acc += kGLw[g] * half * std::exp(-1.0 / ((mid + half * kGLx[g]) *
                                               (1.0 - mid - half * kGLx[g])));
  }
  return acc;
}

// cumulative integral of the weight from 0 to x, composite GL
double weight_cumulative(double x) {
  if (x <= 0.0) return 0.0;
  double acc = 0.0;
  const int panels = 64;
  double h = x / panels;
  for (int i = 0; i < panels; ++i) {
    double mid = (i + 0.5) * h, half = 0.5 * h;
    for (int g = 0; g < kGL; ++g) {
      double s = mid + half * kGLx[g];
      if (s > 0.0 && s < 1.0) acc += kGLw[g] * half * std::exp(-1.0 / (s * (1.0 - s)));
    }
  }
  return acc;
}

}  // namespace

SmoothStep::SmoothStep(int resolution) {
  if (resolution < 256) throw std::invalid_argument("SmoothStep: resolution must be >= 256");
  norm_ = weight_norm();
  // cumulative integral at uniform knots; Hermite evaluation with the exact
  // derivative keeps the tabulation error at ~(1/n)^4
  const int n = resolution;
  coef_.assign(n + 1, 0.0);
  double acc = 0.0;
  const double h = 1.0 / n;
  for (int i = 0; i < n; ++i) {
    double mid = (i + 0.5) * h, half = 0.5 * h;
    double s = 0.0;
    for (int g = 0; g < kGL; ++g) s += kGLw[g] * weight(mid + half * kGLx[g]);
    acc += s * half;
    coef_[i + 1] = acc;
  }
  for (auto& v : coef_) v /= acc;
  // acc equals the weight norm up to quadrature rounding; keep the analytic one
  build_knot_derivatives();
}

SmoothStep::SmoothStep(std::vector<double> table) : coef_(std::move(table)) {
  if (coef_.size() < 257) throw std::invalid_argument("SmoothStep: table too short");
  norm_ = weight_norm();
  build_knot_derivatives();
}

void SmoothStep::build_knot_derivatives() {
  const int n = static_cast<int>(coef_.size()) - 1;
  const double h = 1.0 / n;
  dcoef_.resize(coef_.size());
  for (int i = 0; i <= n; ++i) dcoef_[i] = weight(i * h) / norm_ * h;
}

double SmoothStep::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const int n = static_cast<int>(coef_.size()) - 1;
  double u = x * n;
  int i = static_cast<int>(u);
  if (i >= n) i = n - 1;
  double s = u - i;
  double y0 = coef_[i], y1 = coef_[i + 1];
  double d0 = dcoef_[i], d1 = dcoef_[i + 1];
  double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * d1;
}

double SmoothStep::derivative(double x) const { return weight(x) / norm_; }

DyadicProfile::DyadicProfile(std::shared_ptr<const SmoothStep> step, int probe_scale)
    : step_(std::move(step)), probe_scale_(probe_scale) {}

double DyadicProfile::chi(double r) const {
  if (r <= kSupportLo) return 1.0;
  if (r >= kChiHi) return 0.0;
  return 1.0 - (*step_)((r - kSupportLo) / (kChiHi - kSupportLo));
}

double DyadicProfile::phi(double r) const { return chi(0.5 * r) - chi(r); }

double DyadicProfile::phi_vec(const std::array<double, 3>& xi) const {
  return phi(std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]));
}

double DyadicProfile::chi_vec(const std::array<double, 3>& xi) const {
  return chi(std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]));
}

double DyadicProfile::phi_at_scale(double r_mant, std::int64_t r_exp2, int j) const {
  // phi(2^{-j} r) with r = r_mant * 2^{r_exp2} and r_mant in [0.5, 2); the
  // support pins 2^{r_exp2 - j} to a few dyadic levels around 1.
  std::int64_t e = r_exp2 - j;
  if (e < -2 || e > 3) return 0.0;
  return phi(r_mant * std::exp2(static_cast<double>(e)));
}

double DyadicProfile::probe_lo() const { return kSupportLo * std::exp2(-probe_scale_); }
double DyadicProfile::probe_hi() const { return kSupportHi * std::exp2(-probe_scale_); }

void DyadicProfile::export_table(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  const char magic[8] = {'N', 'I', 'F', 'P', 'R', 'O', 'F', '1'};
  f.write(magic, 8);
  std::uint64_t n = step_->table().size();
  std::int64_t ps = probe_scale_;
  f.write(reinterpret_cast<const char*>(&n), 8);
  f.write(reinterpret_cast<const char*>(&ps), 8);
  f.write(reinterpret_cast<const char*>(step_->table().data()),
          static_cast<std::streamsize>(n * sizeof(double)));
}

DyadicProfile DyadicProfile::import_table(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (std::memcmp(magic, "NIFPROF1", 8) != 0) throw std::runtime_error("bad profile table header");
  std::uint64_t n = 0;
  std::int64_t ps = 0;
  f.read(reinterpret_cast<char*>(&n), 8);
  f.read(reinterpret_cast<char*>(&ps), 8);
  if (n < 257 || n > (1u << 24)) throw std::runtime_error("bad profile table size");
  std::vector<double> table(n);
  f.read(reinterpret_cast<char*>(table.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!f) throw std::runtime_error("truncated profile table");
  return DyadicProfile(std::make_shared<SmoothStep>(std::move(table)), static_cast<int>(ps));
}

std::uint64_t DyadicProfile::table_hash() const {
  const auto& t = step_->table();
  std::uint64_t h = hash64(t.data(), t.size() * sizeof(double));
  h = hash64(&probe_scale_, sizeof(probe_scale_), h);
  return h;
}

DyadicProfile make_dyadic_profile(const std::string& transition_kind, int resolution,
                                  int probe_scale) {
  if (resolution < 256) throw std::invalid_argument("make_dyadic_profile: resolution >= 256");
  std::shared_ptr<const SmoothStep> step;
  if (transition_kind == "canonical") {
    step = resolution == 4096 ? canonical_step() : std::make_shared<SmoothStep>(resolution);
  } else if (transition_kind == "overshoot") {
    // deliberately invalid (non-monotone) transition used by error-path tests
    const int n = std::max(resolution, 512);
    std::vector<double> t(n + 1);
    for (int i = 0; i <= n; ++i) {
      double x = static_cast<double>(i) / n;
      t[i] = x - 0.3 * std::sin(2.0 * M_PI * x);
    }
    step = std::make_shared<SmoothStep>(std::move(t));
  } else {
    throw std::invalid_argument("unknown transition kind: " + transition_kind);
  }
  DyadicProfile prof(step, probe_scale);

  // validate: nonnegativity over the support, partition of unity on a radius sweep
  for (int i = 0; i <= 4096; ++i) {
    double r = DyadicProfile::kSupportLo +
               (DyadicProfile::kSupportHi - DyadicProfile::kSupportLo) * i / 4096.0;
    if (prof.phi(r) < -1e-12)
      throw std::invalid_argument("transition violates phi >= 0 at r=" + std::to_string(r));
  }
  for (int i = 0; i <= 512; ++i) {
    double r = std::exp2(-6.0 + 12.0 * i / 512.0);
    double s = 0.0;
    for (int j = -12; j <= 12; ++j) s += prof.phi(r * std::exp2(static_cast<double>(-j)));
    if (std::fabs(s - 1.0) > 1e-8)
      throw std::invalid_argument("transition violates the partition of unity");
  }
  return prof;
}

double PhiBump::operator()(double r) const {
  if (r <= 1.0) return 1.0;
  if (r >= 2.0) return 0.0;
  return 1.0 - (*step_)(r - 1.0);
}

double PhiBump::vec(const std::array<double, 3>& z) const {
  return (*this)(std::sqrt(z[0] * z[0] + z[1] * z[1] + z[2] * z[2]));
}

std::shared_ptr<const SmoothStep> canonical_step() {
  static std::shared_ptr<const SmoothStep> s = std::make_shared<SmoothStep>(4096);
  return s;
}

}  // namespace niflab
