#pragma once

// Wulff ball W = {F° < 1}: volume, kappa = n|W| = |dW|_F, boundary points and
// the fundamental solution of the anisotropic p-Laplacian.

#include <cmath>

#include "anicap/norms.hpp"
#include "anicap/sphere.hpp"

namespace anicap {

struct WulffData {
  double volume = 0.0;
  double kappa = 0.0;
  SphereResolution resolution;
};

/// |W| = (1/n) \int_{S^{n-1}} F°(theta)^{-n} dtheta.
template <int N>
double wulff_volume(const NormEvaluator<N>& norm, SphereResolution res = {}) {
  const SphereGrid<N> grid(res);
  double sum = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a)
    sum += grid.weights[a] * std::pow(norm.dual_value(grid.dirs[a]), -N);
  return sum / N;
}

template <int N>
WulffData wulff_data(const NormEvaluator<N>& norm, SphereResolution res = {}) {
  WulffData d;
  d.volume = wulff_volume(norm, res);
  d.kappa = N * d.volume;
  d.resolution = res;
  return d;
}

template <int N>
double kappa(const NormEvaluator<N>& norm, SphereResolution res = {}) {
  return N * wulff_volume(norm, res);
}

/// The point of dW whose outward normal is parallel to theta: F_xi(theta).
template <int N>
Vec<N> wulff_boundary_point(const NormEvaluator<N>& norm, const Vec<N>& theta) {
  return norm.gradient(theta);
}

/// Gamma(x) = ((p-1)/(n-p)) kappa^{-1/(p-1)} F°(x)^{(p-n)/(p-1)}.
template <int N>
class FundamentalSolution {
 public:
  FundamentalSolution(const NormEvaluator<N>& norm, double p, double kappa)
      : norm_(&norm), p_(p), kappa_(kappa) {
    require(p > 1.0 && p < N, "fundamental solution requires 1 < p < n");
    require(kappa > 0.0, "kappa must be positive");
    coeff_ = (p - 1.0) / (N - p) * std::pow(kappa, -1.0 / (p - 1.0));
    exponent_ = (p - N) / (p - 1.0);
  }

  double p() const { return p_; }
  double exponent() const { return exponent_; }

  double value(const Vec<N>& x) const {
    return coeff_ * std::pow(norm_->dual_value(x), exponent_);
  }
  Vec<N> gradient(const Vec<N>& x) const {
    const Jet<N> d = norm_->dual_jet(x);
    return coeff_ * exponent_ * std::pow(d.value, exponent_ - 1.0) * d.grad;
  }
  std::pair<double, Vec<N>> evaluate(const Vec<N>& x) const { return {value(x), gradient(x)}; }

 private:
  const NormEvaluator<N>* norm_;
  double p_;
  double kappa_;
  double coeff_ = 0.0;
  double exponent_ = 0.0;
};

/// Value and gradient of Gamma_{F,p} at x.
template <int N>
std::pair<double, Vec<N>> gamma_fundamental(const NormEvaluator<N>& norm, double p,
                                            const Vec<N>& x, double kappa_value) {
  return FundamentalSolution<N>(norm, p, kappa_value).evaluate(x);
}

/// Capacitary potential of W_R: u(x) = (F°(x)/R)^{-(n-p)/(p-1)}, for F°(x) >= R.
template <int N>
double analytic_wulff_potential(const NormEvaluator<N>& norm, double p, double r, const Vec<N>& x) {
  require(p > 1.0 && p < N, "analytic potential requires 1 < p < n");
  const double d = norm.dual_value(x);
  require(d >= r * (1.0 - 1e-12), "point lies inside the Wulff ball");
  return std::pow(d / r, -(N - p) / (p - 1.0));
}

/// Cap_{F,p}(W_R) = kappa ((n-p)/(p-1))^{p-1} R^{n-p}.
inline double wulff_capacity(int n, double kappa_value, double p, double r = 1.0) {
  return kappa_value * std::pow((n - p) / (p - 1.0), p - 1.0) * std::pow(r, n - p);
}

}  // namespace anicap
