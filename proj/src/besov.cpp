#include "niflab/besov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace niflab {

BesovResult accumulate_blocks(const std::map<int, double>& weighted, double r) {
  BesovResult res;
  if (weighted.empty()) return res;
  double peak = 0.0;
  for (const auto& [j, v] : weighted) peak = std::max(peak, v);
  res.floor = peak * 1e-14;
  res.j_lo = weighted.begin()->first;
  res.j_hi = weighted.rbegin()->first;

  if (r == kInf) {
    for (const auto& [j, v] : weighted) {
      if (v < res.floor) { res.truncated = true; continue; }
      res.value = std::max(res.value, v);
    }
  } else {
    double acc = 0.0;
    for (const auto& [j, v] : weighted) {
      if (v < res.floor) { res.truncated = true; continue; }
      acc += std::pow(v, r);
    }
    res.value = std::pow(acc, 1.0 / r);
  }
  return res;
}

namespace {

// trapezoid L^rho norm in time of one block's sampled L^p values
double time_lr(const std::vector<double>& v, double dt, double rho, int stride) {
  if (v.empty()) return 0.0;
  if (rho == kInf) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); i += stride) m = std::max(m, v[i]);
    // the sup norm should see every stored sample regardless of stride
    if (stride > 1)
      for (double x : v) m = std::max(m, x);
    return m;
  }
  double acc = 0.0;
  std::size_t last = 0;
  bool first = true;
  for (std::size_t i = 0; i < v.size(); i += stride) {
    if (!first) {
      double h = dt * static_cast<double>(i - last);
      acc += 0.5 * h * (std::pow(v[last], rho) + std::pow(v[i], rho));
    }
    last = i;
    first = false;
  }
  if (last != v.size() - 1 && v.size() > 1) {
    double h = dt * static_cast<double>(v.size() - 1 - last);
    acc += 0.5 * h * (std::pow(v[last], rho) + std::pow(v.back(), rho));
  }
  return std::pow(acc, 1.0 / rho);
}

}  // namespace

CheminLernerResult chemin_lerner_norm(const TimeSeriesNorm& series, const BesovIndex& idx,
                                      double rho) {
  if (series.dt <= 0.0) throw std::invalid_argument("chemin_lerner_norm: dt must be > 0");
  if (rho < 1.0) throw std::invalid_argument("chemin_lerner_norm: rho must be >= 1");

  // gather per-block time series
  std::map<int, std::vector<double>> blocks;
  for (std::size_t step = 0; step < series.values.size(); ++step)
    for (const auto& [j, v] : series.values[step]) {
      auto& vec = blocks[j];
      vec.resize(series.values.size(), 0.0);
      vec[step] = v;
    }

  CheminLernerResult out;
  std::map<int, double> weighted, weighted_coarse;
  for (const auto& [j, vec] : blocks) {
    double w = std::exp2(idx.s * j);
    weighted[j] = w * time_lr(vec, series.dt, rho, 1);
    weighted_coarse[j] = w * time_lr(vec, series.dt, rho, 2);
  }
  out.value = accumulate_blocks(weighted, idx.r).value;
  if (rho != kInf && series.values.size() >= 5) {
    double coarse = accumulate_blocks(weighted_coarse, idx.r).value;
    if (out.value > 0 && std::fabs(coarse - out.value) > 0.05 * out.value) out.dt_unstable = true;
  }
  return out;
}

}  // namespace niflab
