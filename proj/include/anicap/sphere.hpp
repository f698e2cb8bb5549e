#pragma once

// Quadrature on S^{n-1}. For n = 3: Gauss-Legendre nodes in cos(polar angle)
// times a uniform, half-offset azimuthal grid. For n = 2: a uniform,
// half-offset angular grid (trapezoid rule).

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "anicap/linalg.hpp"

namespace anicap {

struct SphereResolution {
  int polar = 32;    // Gauss-Legendre rings (ignored for n = 2)
  int azimuth = 64;  // must be a multiple of 4 for n = 3
};

/// Gauss-Legendre nodes and weights on [-1, 1], nodes in decreasing order.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int m) {
  std::vector<double> x(m), w(m);
  for (int i = 0; i < m; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = z;
      for (int k = 2; k <= m; ++k) {
        const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (m == 1) p0 = 1.0, p1 = z;
      dp = m * (z * p1 - p0) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    x[i] = z;
    w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

template <int N>
struct SphereGrid;

template <>
struct SphereGrid<3> {
  SphereResolution res;
  std::vector<double> mu;       // cos(polar), per ring
  std::vector<double> polar;    // polar angle, per ring
  std::vector<double> azimuth;  // per column
  std::vector<Vec<3>> dirs;     // ring-major
  std::vector<double> weights;

  explicit SphereGrid(SphereResolution r) : res(r) {
    require(r.polar >= 4 && r.azimuth >= 4, "sphere resolution must be at least 4");
    require(r.azimuth % 4 == 0, "azimuthal resolution must be a multiple of 4");
    auto [x, w] = gauss_legendre(r.polar);
    mu = x;
    for (double m : mu) polar.push_back(std::acos(m));
    const double dphi = 2.0 * std::numbers::pi / r.azimuth;
    for (int k = 0; k < r.azimuth; ++k) azimuth.push_back((k + 0.5) * dphi);
    for (int j = 0; j < r.polar; ++j) {
      const double st = std::sqrt(1.0 - mu[j] * mu[j]);
      for (int k = 0; k < r.azimuth; ++k) {
        dirs.emplace_back(st * std::cos(azimuth[k]), st * std::sin(azimuth[k]), mu[j]);
        weights.push_back(w[j] * dphi);
      }
    }
  }
  int rings() const { return res.polar; }
  int columns() const { return res.azimuth; }
  int index(int ring, int column) const { return ring * res.azimuth + column; }
  std::size_t size() const { return dirs.size(); }
};

template <>
struct SphereGrid<2> {
  SphereResolution res;
  std::vector<double> azimuth;
  std::vector<Vec<2>> dirs;
  std::vector<double> weights;

  explicit SphereGrid(SphereResolution r) : res(r) {
    require(r.azimuth >= 4, "sphere resolution must be at least 4");
    const double dphi = 2.0 * std::numbers::pi / r.azimuth;
    for (int k = 0; k < r.azimuth; ++k) {
      azimuth.push_back((k + 0.5) * dphi);
      dirs.emplace_back(std::cos(azimuth.back()), std::sin(azimuth.back()));
      weights.push_back(dphi);
    }
  }
  int rings() const { return 1; }
  int columns() const { return res.azimuth; }
  int index(int, int column) const { return column; }
  std::size_t size() const { return dirs.size(); }
};

/// |S^{n-1}|.
template <int N>
constexpr double sphere_area() {
  if constexpr (N == 2) return 2.0 * std::numbers::pi;
  else return 4.0 * std::numbers::pi;
}

}  // namespace anicap
