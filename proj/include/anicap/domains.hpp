#pragma once

// Star-shaped domains {x : |x| < rho(x/|x|)} and their boundary geometry.
// The defining function is phi(x) = |x| - g(x), with g the 0-homogeneous
// extension of rho, so that phi < 0 inside and nu = grad phi / |grad phi|.

#include <array>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "anicap/norms.hpp"
#include "anicap/sphere.hpp"

namespace anicap {

enum class DomainKind { Ball, WulffRadial, Ellipsoid, PerturbedWulff };

inline std::string to_string(DomainKind k) {
  switch (k) {
    case DomainKind::Ball: return "ball";
    case DomainKind::WulffRadial: return "wulff";
    case DomainKind::Ellipsoid: return "ellipsoid";
    case DomainKind::PerturbedWulff: return "perturbed_wulff";
  }
  return "?";
}

struct DomainSpec {
  DomainKind kind = DomainKind::Ball;
  double radius = 1.0;
  std::vector<double> semi_axes;  // Ellipsoid
  double amplitude = 0.0;         // PerturbedWulff
  std::string mode = "l2m0";      // PerturbedWulff

  static DomainSpec ball(double r) { return {DomainKind::Ball, r, {}, 0.0, ""}; }
  static DomainSpec wulff(double r) { return {DomainKind::WulffRadial, r, {}, 0.0, ""}; }
  static DomainSpec ellipsoid(std::vector<double> axes) {
    return {DomainKind::Ellipsoid, 1.0, std::move(axes), 0.0, ""};
  }
  static DomainSpec perturbed_wulff(double r, double amp, std::string mode) {
    return {DomainKind::PerturbedWulff, r, {}, amp, std::move(mode)};
  }

  std::string describe() const {
    switch (kind) {
      case DomainKind::Ball: return "ball(R=" + std::to_string(radius) + ")";
      case DomainKind::WulffRadial: return "wulff(R=" + std::to_string(radius) + ")";
      case DomainKind::Ellipsoid: {
        std::string s = "ellipsoid(";
        for (std::size_t i = 0; i < semi_axes.size(); ++i)
          s += (i ? "," : "") + std::to_string(semi_axes[i]);
        return s + ")";
      }
      case DomainKind::PerturbedWulff:
        return "perturbed_wulff(R=" + std::to_string(radius) + ",eps=" + std::to_string(amplitude) +
               "," + mode + ")";
    }
    return "?";
  }
};

/// Homogeneous polynomial sum_k c_k prod_i x_i^{e_ki}.
template <int N>
struct Polynomial {
  struct Term {
    double coeff;
    std::array<int, N> exps;
  };
  std::vector<Term> terms;
  int degree = 0;

  Jet<N> jet(const Vec<N>& x) const {
    Jet<N> out = constant_jet<N>(0.0);
    for (const auto& t : terms) {
      // powers x_i^{e}, x_i^{e-1}, x_i^{e-2} with their falling-factorial factors
      std::array<double, N> v0, v1, v2;
      for (int i = 0; i < N; ++i) {
        const int e = t.exps[i];
        v0[i] = std::pow(x(i), e);
        v1[i] = e >= 1 ? e * std::pow(x(i), e - 1) : 0.0;
        v2[i] = e >= 2 ? e * (e - 1) * std::pow(x(i), e - 2) : 0.0;
      }
      auto prod_except = [&](int a, int b) {
        double p = 1.0;
        for (int i = 0; i < N; ++i)
          if (i != a && i != b) p *= v0[i];
        return p;
      };
      out.value += t.coeff * prod_except(-1, -1);
      for (int i = 0; i < N; ++i) {
        out.grad(i) += t.coeff * v1[i] * prod_except(i, -1);
        out.hess(i, i) += t.coeff * v2[i] * prod_except(i, -1);
        for (int j = 0; j < N; ++j)
          if (j != i) out.hess(i, j) += t.coeff * v1[i] * v1[j] * prod_except(i, j);
      }
    }
    return out;
  }
};

/// Harmonic polynomial for a named low-order mode, normalised so that the
/// restriction to the sphere has maximum modulus 1.
template <int N>
Polynomial<N> harmonic_mode(const std::string& name) {
  Polynomial<N> p;
  if constexpr (N == 3) {
    using T = typename Polynomial<3>::Term;
    if (name == "l1") p = {{T{1.0, {0, 0, 1}}}, 1};
    else if (name == "l2m0") p = {{T{1.0, {0, 0, 2}}, T{-0.5, {2, 0, 0}}, T{-0.5, {0, 2, 0}}}, 2};
    else if (name == "l2m2") p = {{T{1.0, {2, 0, 0}}, T{-1.0, {0, 2, 0}}}, 2};
    else if (name == "l3m0")
      p = {{T{1.0, {0, 0, 3}}, T{-1.5, {2, 0, 1}}, T{-1.5, {0, 2, 1}}}, 3};
    else if (name == "l4m0")
      p = {{T{1.0, {0, 0, 4}}, T{-3.0, {2, 0, 2}}, T{-3.0, {0, 2, 2}}, T{0.375, {4, 0, 0}},
            T{0.75, {2, 2, 0}}, T{0.375, {0, 4, 0}}},
           4};
    else require(false, "unknown harmonic mode '" + name + "' (l1, l2m0, l2m2, l3m0, l4m0)");
  } else {
    using T = typename Polynomial<2>::Term;
    if (name == "cos1") p = {{T{1.0, {1, 0}}}, 1};
    else if (name == "cos2") p = {{T{1.0, {2, 0}}, T{-1.0, {0, 2}}}, 2};
    else if (name == "cos3") p = {{T{1.0, {3, 0}}, T{-3.0, {1, 2}}}, 3};
    else if (name == "cos4") p = {{T{1.0, {4, 0}}, T{-6.0, {2, 2}}, T{1.0, {0, 4}}}, 4};
    else require(false, "unknown harmonic mode '" + name + "' (cos1..cos4)");
  }
  return p;
}

template <int N>
struct SurfaceSample {
  Vec<N> theta;        // direction on the unit sphere
  Vec<N> x;            // boundary point rho(theta) theta
  Vec<N> normal;       // outward Euclidean unit normal
  double weight = 0;   // Euclidean area element
  Vec<N> grad_phi;
  Mat<N> hess_phi;
};

template <int N>
class StarDomain {
 public:
  /// `norm` is required for the Wulff-based profiles and ignored otherwise.
  StarDomain(DomainSpec spec, std::shared_ptr<const NormEvaluator<N>> norm = nullptr)
      : spec_(std::move(spec)), norm_(std::move(norm)) {
    require(spec_.radius > 0.0, "domain radius must be positive");
    switch (spec_.kind) {
      case DomainKind::Ball: break;
      case DomainKind::WulffRadial:
        require(norm_ != nullptr, "wulff domain needs a norm");
        break;
      case DomainKind::Ellipsoid:
        require(static_cast<int>(spec_.semi_axes.size()) == N,
                "ellipsoid needs one semi-axis per dimension");
        for (double a : spec_.semi_axes) require(a > 0.0, "ellipsoid semi-axes must be positive");
        break;
      case DomainKind::PerturbedWulff:
        require(norm_ != nullptr, "perturbed wulff domain needs a norm");
        mode_ = harmonic_mode<N>(spec_.mode);
        require(std::abs(spec_.amplitude) < 1.0, "perturbation amplitude must be below 1");
        break;
    }
    const SphereGrid<N> probe(N == 3 ? SphereResolution{48, 96} : SphereResolution{4, 512});
    min_rho_ = 1e300;
    max_rho_ = 0.0;
    for (const auto& d : probe.dirs) {
      const double r = radius(d);
      min_rho_ = std::min(min_rho_, r);
      max_rho_ = std::max(max_rho_, r);
    }
    require(min_rho_ > 0.0, "radial profile must stay positive");
  }

  const DomainSpec& spec() const { return spec_; }
  const NormEvaluator<N>* norm() const { return norm_.get(); }
  double min_radius() const { return min_rho_; }
  double max_radius() const { return max_rho_; }

  /// rho(x/|x|) for any nonzero x.
  double radius(const Vec<N>& x) const {
    const double r = x.norm();
    switch (spec_.kind) {
      case DomainKind::Ball: return spec_.radius;
      case DomainKind::WulffRadial: return spec_.radius * r / norm_->dual_value(x);
      case DomainKind::Ellipsoid: {
        double h = 0.0;
        for (int i = 0; i < N; ++i) h += x(i) * x(i) / (spec_.semi_axes[i] * spec_.semi_axes[i]);
        return r / std::sqrt(h);
      }
      case DomainKind::PerturbedWulff: {
        const double y = mode_.jet(x).value / std::pow(r, mode_.degree);
        return spec_.radius * (1.0 + spec_.amplitude * y) * r / norm_->dual_value(x);
      }
    }
    return 0.0;
  }

  /// Jet of the 0-homogeneous extension g(x) = rho(x/|x|).
  Jet<N> radius_jet(const Vec<N>& x) const {
    const Jet<N> len = euclidean_length_jet<N>(x);
    switch (spec_.kind) {
      case DomainKind::Ball: return constant_jet<N>(spec_.radius);
      case DomainKind::WulffRadial:
        return spec_.radius * (len * reciprocal(norm_->dual_jet(x)));
      case DomainKind::Ellipsoid: {
        Mat<N> d = Mat<N>::Zero();
        for (int i = 0; i < N; ++i) d(i, i) = 1.0 / (spec_.semi_axes[i] * spec_.semi_axes[i]);
        Jet<N> q;
        q.value = x.dot(d * x);
        q.grad = 2.0 * d * x;
        q.hess = 2.0 * d;
        return len * power(q, -0.5);
      }
      case DomainKind::PerturbedWulff: {
        const Jet<N> y = mode_.jet(x) * power(len, -static_cast<double>(mode_.degree));
        const Jet<N> bump = constant_jet<N>(1.0) + spec_.amplitude * y;
        return spec_.radius * (bump * (len * reciprocal(norm_->dual_jet(x))));
      }
    }
    return constant_jet<N>(0.0);
  }

  /// phi(x) = |x| - g(x).
  Jet<N> defining_jet(const Vec<N>& x) const {
    return euclidean_length_jet<N>(x) - radius_jet(x);
  }

  SurfaceSample<N> sample(const Vec<N>& theta, double sphere_weight) const {
    SurfaceSample<N> s;
    s.theta = theta;
    const double rho = radius(theta);
    s.x = rho * theta;
    const Jet<N> phi = defining_jet(s.x);
    s.grad_phi = phi.grad;
    s.hess_phi = phi.hess;
    const double gn = phi.grad.norm();
    s.normal = phi.grad / gn;
    s.weight = std::pow(rho, N - 1) * gn * sphere_weight;
    return s;
  }

 private:
  DomainSpec spec_;
  std::shared_ptr<const NormEvaluator<N>> norm_;
  Polynomial<N> mode_;
  double min_rho_ = 0.0;
  double max_rho_ = 0.0;
};

template <int N>
std::vector<SurfaceSample<N>> boundary_quadrature(const StarDomain<N>& d, SphereResolution res) {
  const SphereGrid<N> grid(res);
  std::vector<SurfaceSample<N>> out;
  out.reserve(grid.size());
  for (std::size_t a = 0; a < grid.size(); ++a) out.push_back(d.sample(grid.dirs[a], grid.weights[a]));
  return out;
}

template <int N>
double euclidean_area(const std::vector<SurfaceSample<N>>& samples) {
  double s = 0.0;
  for (const auto& q : samples) s += q.weight;
  return s;
}

/// |dOmega|_F = sum F(nu) dsigma.
template <int N>
double anisotropic_area(const std::vector<SurfaceSample<N>>& samples, const NormEvaluator<N>& f) {
  double s = 0.0;
  for (const auto& q : samples) s += f.value(q.normal) * q.weight;
  return s;
}

/// |Omega| = (1/n) int rho^n dtheta.
template <int N>
double volume(const StarDomain<N>& d, SphereResolution res) {
  const SphereGrid<N> grid(res);
  double s = 0.0;
  for (std::size_t a = 0; a < grid.size(); ++a) s += grid.weights[a] * std::pow(d.radius(grid.dirs[a]), N);
  return s / N;
}

/// F_xi_xi(grad phi) * hess phi; its nonzero eigenvalues are the anisotropic
/// principal curvatures.
template <int N>
Mat<N> anisotropic_weingarten(const NormEvaluator<N>& f, const SurfaceSample<N>& s) {
  return f.hessian(s.grad_phi) * s.hess_phi;
}

/// H_F = div F_xi(grad phi), positive on convex domains.
template <int N>
double anisotropic_mean_curvature(const NormEvaluator<N>& f, const SurfaceSample<N>& s) {
  return anisotropic_weingarten(f, s).trace();
}

/// (n-2)/(n-1) S1^2 - 2 S2 of the anisotropic Weingarten map.
template <int N>
double anisotropic_pinch(const NormEvaluator<N>& f, const SurfaceSample<N>& s) {
  const Mat<N> m = anisotropic_weingarten(f, s);
  const double s1 = m.trace();
  return (N - 2.0) / (N - 1.0) * s1 * s1 - 2.0 * s2<N>(m);
}

/// Smallest Euclidean principal curvature at the sample.
template <int N>
double min_principal_curvature(const SurfaceSample<N>& s) {
  const Mat<N> p = Mat<N>::Identity() - s.normal * s.normal.transpose();
  const Mat<N> ii = p * s.hess_phi * p / s.grad_phi.norm();
  // Push the normal direction out of the way.
  const double shift = 1.0 + ii.norm();
  return min_eigenvalue<N>(ii + shift * s.normal * s.normal.transpose());
}

template <int N>
bool is_convex(const std::vector<SurfaceSample<N>>& samples, double tol = 1e-9) {
  for (const auto& s : samples)
    if (min_principal_curvature(s) < -tol) return false;
  return true;
}

}  // namespace anicap
