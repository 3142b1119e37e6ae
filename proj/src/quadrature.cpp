#include "niflab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace niflab {

const GLRule& gl_rule(int n) {
  static std::map<int, GLRule> cache;
  static std::mutex m;
  std::lock_guard<std::mutex> lock(m);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GLRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (t * p0 - p1) / (t * t - 1.0);
      double dt = p0 / pp;
      t -= dt;
      if (std::fabs(dt) < 1e-15) break;
    }
    r.x[i] = -t;
    r.x[n - 1 - i] = t;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - t * t) * pp * pp);
  }
  return cache.emplace(n, std::move(r)).first->second;
}

std::vector<QuadPoint> spherical_grid(double r0, double r1, int nr, int nu, int naz) {
  const GLRule& gr = gl_rule(nr);
  const GLRule& gu = gl_rule(nu);
  std::vector<QuadPoint> pts;
  pts.reserve(static_cast<std::size_t>(nr) * nu * naz);
  const double daz = 2.0 * M_PI / naz;
  for (int ir = 0; ir < nr; ++ir) {
    double r = 0.5 * (r0 + r1) + 0.5 * (r1 - r0) * gr.x[ir];
    double wr = 0.5 * (r1 - r0) * gr.w[ir] * r * r;
    for (int iu = 0; iu < nu; ++iu) {
      double u = gu.x[iu];  // cos(theta)
      double su = std::sqrt(std::max(0.0, 1.0 - u * u));
      double wu = gu.w[iu];
      for (int ia = 0; ia < naz; ++ia) {
        double az = daz * ia;
        QuadPoint p;
        p.x = {r * su * std::cos(az), r * su * std::sin(az), r * u};
        p.w = wr * wu * daz;
        pts.push_back(p);
      }
    }
  }
  return pts;
}

}  // namespace niflab
