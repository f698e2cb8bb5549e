#pragma once

// Smooth Minkowski norms, their duals and the tensors built from them.
//
// Every family provides closed-form value, gradient and Hessian. Duals are
// closed-form for Euclidean, Ellipsoid and PowerNorm; SmoothedPolytope duals
// come from a Newton-type ascent on the support problem
//   F°(x) = max { <xi, x> : F(xi) = 1 }.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "anicap/linalg.hpp"

namespace anicap {

enum class NormFamily { Euclidean, Ellipsoid, PowerNorm, SmoothedPolytope };

inline std::string to_string(NormFamily f) {
  switch (f) {
    case NormFamily::Euclidean: return "euclidean";
    case NormFamily::Ellipsoid: return "ellipsoid";
    case NormFamily::PowerNorm: return "power";
    case NormFamily::SmoothedPolytope: return "smoothed_polytope";
  }
  return "unknown";
}

struct NormSpec {
  NormFamily family = NormFamily::Euclidean;
  int dimension = 3;
  Eigen::MatrixXd matrix;                   // Ellipsoid
  double exponent = 4.0;                    // PowerNorm
  std::vector<Eigen::VectorXd> directions;  // SmoothedPolytope
  int smoothing_exponent = 4;               // SmoothedPolytope, even >= 4
  double blend = 0.05;                      // SmoothedPolytope, >= 0

  static NormSpec euclidean(int n) {
    NormSpec s;
    s.family = NormFamily::Euclidean;
    s.dimension = n;
    return s;
  }
  static NormSpec ellipsoid(const Eigen::MatrixXd& a) {
    NormSpec s;
    s.family = NormFamily::Ellipsoid;
    s.dimension = static_cast<int>(a.rows());
    s.matrix = a;
    return s;
  }
  static NormSpec power(int n, double q) {
    NormSpec s;
    s.family = NormFamily::PowerNorm;
    s.dimension = n;
    s.exponent = q;
    return s;
  }
  static NormSpec smoothed_polytope(std::vector<Eigen::VectorXd> dirs, int exponent,
                                    double blend) {
    NormSpec s;
    s.family = NormFamily::SmoothedPolytope;
    s.dimension = dirs.empty() ? 0 : static_cast<int>(dirs.front().size());
    s.directions = std::move(dirs);
    s.smoothing_exponent = exponent;
    s.blend = blend;
    return s;
  }
  /// Coordinate-axis directions, the "cube" polytope.
  static NormSpec cube(int n, int exponent = 4, double blend = 0.05) {
    std::vector<Eigen::VectorXd> dirs;
    for (int i = 0; i < n; ++i) dirs.push_back(Eigen::VectorXd::Unit(n, i));
    return smoothed_polytope(std::move(dirs), exponent, blend);
  }

  std::string describe() const {
    std::ostringstream os;
    os << to_string(family);
    switch (family) {
      case NormFamily::Euclidean: break;
      case NormFamily::Ellipsoid:
        os << "(diag=";
        for (int i = 0; i < matrix.rows(); ++i) os << (i ? "," : "") << matrix(i, i);
        os << ")";
        break;
      case NormFamily::PowerNorm: os << "(q=" << exponent << ")"; break;
      case NormFamily::SmoothedPolytope:
        os << "(k=" << directions.size() << ",s=" << smoothing_exponent << ",eps=" << blend
           << ")";
        break;
    }
    return os.str();
  }
};

class DualSolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <int N>
struct EuclideanFamily {
  double value(const Vec<N>& xi) const { return xi.norm(); }
  void value_gradient(const Vec<N>& xi, double& f, Vec<N>& g) const {
    f = xi.norm();
    g = xi / f;
  }
  Jet<N> jet(const Vec<N>& xi) const { return euclidean_length_jet<N>(xi); }
};

template <int N>
struct EllipsoidFamily {
  Mat<N> a;
  double value(const Vec<N>& xi) const { return std::sqrt(xi.dot(a * xi)); }
  void value_gradient(const Vec<N>& xi, double& f, Vec<N>& g) const {
    const Vec<N> ax = a * xi;
    f = std::sqrt(xi.dot(ax));
    g = ax / f;
  }
  Jet<N> jet(const Vec<N>& xi) const {
    Jet<N> j;
    const Vec<N> ax = a * xi;
    j.value = std::sqrt(xi.dot(ax));
    j.grad = ax / j.value;
    j.hess = (a - j.grad * j.grad.transpose()) / j.value;
    return j;
  }
};

// (sum |xi_i|^q)^(1/q), evaluated on xi / max|xi_i| to stay in range.
template <int N>
struct PowerFamily {
  double q = 4.0;
  double value(const Vec<N>& xi) const {
    const double m = xi.cwiseAbs().maxCoeff();
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += std::pow(std::abs(xi(i)) / m, q);
    return m * std::pow(s, 1.0 / q);
  }
  void value_gradient(const Vec<N>& xi, double& f, Vec<N>& g) const {
    const double m = xi.cwiseAbs().maxCoeff();
    Vec<N> pw;
    double s = 0.0;
    for (int i = 0; i < N; ++i) {
      pw(i) = std::pow(std::abs(xi(i)) / m, q - 1.0);
      s += pw(i) * std::abs(xi(i)) / m;
    }
    const double fy = std::pow(s, 1.0 / q);
    f = m * fy;
    const double scale = std::pow(fy, 1.0 - q);
    for (int i = 0; i < N; ++i) g(i) = std::copysign(pw(i), xi(i)) * scale;
  }
  Jet<N> jet(const Vec<N>& xi) const {
    const double m = xi.cwiseAbs().maxCoeff();
    const Vec<N> y = xi / m;
    Jet<N> j;
    double s = 0.0;
    for (int i = 0; i < N; ++i) s += std::pow(std::abs(y(i)), q);
    const double fy = std::pow(s, 1.0 / q);
    const double scale = std::pow(fy, 1.0 - q);
    for (int i = 0; i < N; ++i)
      j.grad(i) = std::copysign(std::pow(std::abs(y(i)), q - 1.0), y(i)) * scale;
    Mat<N> d = Mat<N>::Zero();
    for (int i = 0; i < N; ++i) d(i, i) = std::pow(std::abs(y(i)), q - 2.0) * std::pow(fy, 2.0 - q);
    // Hessian is (-1)-homogeneous: F_ij(xi) = F_ij(y) / m.
    j.hess = (q - 1.0) / fy * (d - j.grad * j.grad.transpose()) / m;
    j.value = m * fy;
    return j;
  }
};

// (sum_k (w_k.xi)^s + eps |xi|^s)^(1/s), s even.
template <int N>
struct SmoothedPolytopeFamily {
  std::vector<Vec<N>> dirs;
  int s = 4;
  double eps = 0.05;

  // G and its derivatives on the unit-max-norm rescaling of xi.
  double g_value(const Vec<N>& y) const {
    double g = 0.0;
    for (const auto& w : dirs) g += std::pow(w.dot(y), s);
    return g + eps * std::pow(y.squaredNorm(), 0.5 * s);
  }
  double value(const Vec<N>& xi) const {
    const double m = xi.cwiseAbs().maxCoeff();
    return m * std::pow(g_value(xi / m), 1.0 / s);
  }
  void value_gradient(const Vec<N>& xi, double& f, Vec<N>& grad) const {
    const double m = xi.cwiseAbs().maxCoeff();
    const Vec<N> y = xi / m;
    double g = 0.0;
    Vec<N> dg = Vec<N>::Zero();
    for (const auto& w : dirs) {
      const double t = w.dot(y);
      const double t1 = std::pow(t, s - 1);
      g += t1 * t;
      dg += s * t1 * w;
    }
    const double r2 = y.squaredNorm();
    const double rs2 = std::pow(r2, 0.5 * (s - 2));
    g += eps * rs2 * r2;
    dg += eps * s * rs2 * y;
    const double fy = std::pow(g, 1.0 / s);
    f = m * fy;
    grad = std::pow(fy, 1 - s) * dg / s;
  }
  Jet<N> jet(const Vec<N>& xi) const {
    const double m = xi.cwiseAbs().maxCoeff();
    const Vec<N> y = xi / m;
    double g = 0.0;
    Vec<N> dg = Vec<N>::Zero();
    Mat<N> d2g = Mat<N>::Zero();
    for (const auto& w : dirs) {
      const double t = w.dot(y);
      const double t2 = std::pow(t, s - 2);
      g += t2 * t * t;
      dg += s * t2 * t * w;
      d2g += s * (s - 1) * t2 * w * w.transpose();
    }
    const double r2 = y.squaredNorm();
    const double rs2 = std::pow(r2, 0.5 * (s - 2));
    g += eps * rs2 * r2;
    dg += eps * s * rs2 * y;
    d2g += eps * s * rs2 * (Mat<N>::Identity() + (s - 2) * y * y.transpose() / r2);
    const double fy = std::pow(g, 1.0 / s);
    Jet<N> j;
    j.value = m * fy;
    j.grad = std::pow(fy, 1 - s) * dg / s;
    j.hess = (std::pow(fy, 1 - s) * d2g / s - (s - 1) * j.grad * j.grad.transpose() / fy) / m;
    return j;
  }
};

template <int N>
using Family = std::variant<EuclideanFamily<N>, EllipsoidFamily<N>, PowerFamily<N>,
                            SmoothedPolytopeFamily<N>>;

}  // namespace detail

/// Settings for the numerical support-function maximisation.
struct DualSolverOptions {
  int starts = 8;
  int max_iterations = 200;
  double tolerance = 1e-10;
};

template <int N>
class NormEvaluator {
 public:
  explicit NormEvaluator(const NormSpec& spec, DualSolverOptions dual_options = {})
      : spec_(spec), dual_options_(dual_options) {
    require(spec.dimension == N, "norm dimension " + std::to_string(spec.dimension) +
                                     " does not match evaluator dimension " +
                                     std::to_string(N));
    switch (spec.family) {
      case NormFamily::Euclidean:
        primal_ = detail::EuclideanFamily<N>{};
        dual_ = detail::EuclideanFamily<N>{};
        break;
      case NormFamily::Ellipsoid: {
        require(spec.matrix.rows() == N && spec.matrix.cols() == N,
                "ellipsoid matrix must be " + std::to_string(N) + "x" + std::to_string(N));
        const Mat<N> a = spec.matrix;
        require((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * a.cwiseAbs().maxCoeff(),
                "ellipsoid matrix must be symmetric");
        require(min_eigenvalue<N>(a) > 0.0, "ellipsoid matrix must be positive definite");
        primal_ = detail::EllipsoidFamily<N>{a};
        dual_ = detail::EllipsoidFamily<N>{a.inverse()};
        break;
      }
      case NormFamily::PowerNorm: {
        const double q = spec.exponent;
        require(std::isfinite(q) && q > 1.0, "power norm exponent must satisfy 1 < q < inf");
        primal_ = detail::PowerFamily<N>{q};
        dual_ = detail::PowerFamily<N>{q / (q - 1.0)};
        break;
      }
      case NormFamily::SmoothedPolytope: {
        const int s = spec.smoothing_exponent;
        require(s >= 4 && s % 2 == 0, "smoothing exponent must be an even integer >= 4");
        require(spec.blend >= 0.0, "blend must be non-negative");
        require(!spec.directions.empty(), "smoothed polytope needs directions");
        Eigen::MatrixXd w(N, static_cast<Eigen::Index>(spec.directions.size()));
        std::vector<Vec<N>> dirs;
        for (std::size_t k = 0; k < spec.directions.size(); ++k) {
          require(spec.directions[k].size() == N, "direction has wrong dimension");
          w.col(static_cast<Eigen::Index>(k)) = spec.directions[k];
          dirs.push_back(spec.directions[k]);
        }
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
        const auto sv = svd.singularValues();
        require(sv.size() == N && sv(N - 1) > 1e-10 * sv(0), "directions must span R^n");
        primal_ = detail::SmoothedPolytopeFamily<N>{std::move(dirs), s, spec.blend};
        break;
      }
    }
  }

  const NormSpec& spec() const { return spec_; }
  bool closed_form_dual() const { return dual_.has_value(); }

  double value(const Vec<N>& xi) const {
    check_nonzero(xi);
    return std::visit([&](const auto& f) { return f.value(xi); }, primal_);
  }
  Vec<N> gradient(const Vec<N>& xi) const { return jet(xi).grad; }
  Mat<N> hessian(const Vec<N>& xi) const { return jet(xi).hess; }
  Jet<N> jet(const Vec<N>& xi) const {
    check_nonzero(xi);
    return std::visit([&](const auto& f) { return f.jet(xi); }, primal_);
  }
  /// Value and gradient without the Hessian; no zero check (hot path).
  void value_gradient(const Vec<N>& xi, double& f, Vec<N>& g) const {
    std::visit([&](const auto& fam) { fam.value_gradient(xi, f, g); }, primal_);
  }

  /// V(xi) = F(xi)^p / p.
  double potential(const Vec<N>& xi, double p) const { return std::pow(value(xi), p) / p; }

  /// a_ij = d^2 (F^2/2) = F_i F_j + F F_ij.
  Mat<N> a_matrix(const Vec<N>& xi) const {
    const Jet<N> j = jet(xi);
    return j.grad * j.grad.transpose() + j.value * j.hess;
  }
  /// a_ij,p = d^2 (F^p/p) = F^(p-2) (a_ij + (p-2) F_i F_j).
  Mat<N> a_p_matrix(const Vec<N>& xi, double p) const {
    require(p > 1.0, "a_p requires p > 1");
    const Jet<N> j = jet(xi);
    const Mat<N> a = j.grad * j.grad.transpose() + j.value * j.hess;
    return std::pow(j.value, p - 2.0) * (a + (p - 2.0) * j.grad * j.grad.transpose());
  }

  double dual_value(const Vec<N>& x) const { return dual_jet_first(x).value; }
  Vec<N> dual_gradient(const Vec<N>& x) const { return dual_jet_first(x).grad; }
  Mat<N> dual_hessian(const Vec<N>& x) const { return dual_jet(x).hess; }

  /// F°, its gradient and Hessian. For numerical duals the Hessian follows
  /// from the inverse relation d^2(F°^2/2)(x) = [d^2(F^2/2)(F°_x(x))]^-1.
  Jet<N> dual_jet(const Vec<N>& x) const {
    check_nonzero(x);
    if (dual_) return std::visit([&](const auto& f) { return f.jet(x); }, *dual_);
    Jet<N> d = dual_jet_first(x);
    const Jet<N> j = jet(d.grad);
    const Mat<N> a = j.grad * j.grad.transpose() + j.value * j.hess;
    const Mat<N> half_sq_hess = a.inverse();
    d.hess = (half_sq_hess - d.grad * d.grad.transpose()) / d.value;
    return d;
  }

  const DualSolverOptions& dual_options() const { return dual_options_; }

 private:
  static void check_nonzero(const Vec<N>& v) {
    if (!(v.squaredNorm() > 0.0)) throw std::invalid_argument("norm evaluated at the origin");
  }

  // Value and gradient of F°; Hessian left zero.
  Jet<N> dual_jet_first(const Vec<N>& x) const {
    check_nonzero(x);
    if (dual_) {
      Jet<N> j;
      std::visit([&](const auto& f) { f.value_gradient(x, j.value, j.grad); }, *dual_);
      return j;
    }
    return support_maximizer(x);
  }

  // Maximise f(eta) = <eta, x> / F(eta) by damped Newton steps in the tangent
  // space of eta (f is 0-homogeneous). Returns F°(x) and the maximiser
  // normalised to F = 1, which is the gradient of F° at x.
  Jet<N> support_maximizer(const Vec<N>& x) const {
    const double xn = x.norm();
    const Vec<N> xhat = x / xn;
    Jet<N> best;
    best.value = -std::numeric_limits<double>::infinity();
    for (int start = 0; start < dual_options_.starts; ++start) {
      Vec<N> eta = xhat;
      if (start > 0) {
        const int axis = (start - 1) % N;
        const double sign = ((start - 1) / N) % 2 == 0 ? 1.0 : -1.0;
        eta += 0.5 * sign * Vec<N>::Unit(axis);
        if (eta.norm() < 1e-3) eta = xhat;
      }
      bool converged = false;
      double f_eta = 0.0;
      for (int it = 0; it < dual_options_.max_iterations; ++it) {
        eta /= eta.norm();
        const Jet<N> fj = jet(eta);
        const double a = eta.dot(xhat);
        f_eta = a / fj.value;
        const Vec<N> grad = xhat / fj.value - a * fj.grad / (fj.value * fj.value);
        const Mat<N> proj = Mat<N>::Identity() - eta * eta.transpose();
        const Vec<N> tg = proj * grad;
        if (tg.norm() <= dual_options_.tolerance * std::abs(f_eta) + 1e-300) {
          converged = true;
          break;
        }
        const Mat<N> h = -(xhat * fj.grad.transpose() + fj.grad * xhat.transpose()) /
                             (fj.value * fj.value) -
                         a * fj.hess / (fj.value * fj.value) +
                         2.0 * a * fj.grad * fj.grad.transpose() /
                             (fj.value * fj.value * fj.value);
        // Negative definite on the tangent space: shift the normal direction.
        const Mat<N> ht = proj * h * proj - eta * eta.transpose();
        Vec<N> step;
        Eigen::LDLT<Mat<N>> ldlt(-ht);
        if (ldlt.info() == Eigen::Success && ldlt.isPositive() && a > 0.0) {
          step = ldlt.solve(tg);
          if (step.dot(tg) <= 0.0) step = tg;
        } else {
          step = tg;
        }
        step = proj * step;
        // Backtrack on f along the step.
        double t = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 60; ++ls) {
          const Vec<N> trial = eta + t * step;
          const double ft = trial.dot(xhat) / value(trial);
          if (ft >= f_eta - 1e-15 * std::abs(f_eta)) {
            eta = trial;
            improved = true;
            break;
          }
          t *= 0.5;
        }
        if (!improved) {
          converged = tg.norm() <= 1e-8 * std::abs(f_eta);
          break;
        }
      }
      if (f_eta > best.value) {
        eta /= eta.norm();
        const double fe = value(eta);
        best.value = eta.dot(xhat) / fe;
        best.grad = eta / fe;
      }
      if (converged) {
        best.value *= xn;
        return best;
      }
    }
    throw DualSolveError("dual norm maximisation did not converge within " +
                         std::to_string(dual_options_.max_iterations) + " iterations");
  }

  NormSpec spec_;
  DualSolverOptions dual_options_;
  detail::Family<N> primal_;
  std::optional<detail::Family<N>> dual_;
};

template <int N>
NormEvaluator<N> make_norm(const NormSpec& spec) {
  return NormEvaluator<N>(spec);
}

struct NormValidationReport {
  double euler_residual = 0.0;       // |<F_xi, xi> - F| / F and its dual analogue
  double hessian_null_residual = 0.0;  // |F_xixi xi|
  double unit_residual = 0.0;        // |F(F°_x) - 1|, |F°(F_xi) - 1|
  double inversion_residual = 0.0;   // |F° F_xi(F°_x) - x| / |x| and dual
  double min_ellipticity = 0.0;      // min eigenvalue of d^2(F^2/2) on the sphere
  int samples = 0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Residuals of the basic norm/dual identities over random sphere directions,
/// plus the coordinate axes and the polytope directions, where ellipticity
/// degenerates first.
template <int N>
NormValidationReport validate_norm(const NormEvaluator<N>& norm, int sample_count,
                                   std::uint64_t seed = 1, double tolerance = -1.0) {
  require(sample_count >= 1, "sample_count must be >= 1");
  NormValidationReport r;
  r.tolerance = tolerance > 0.0 ? tolerance : (norm.closed_form_dual() ? 1e-9 : 1e-6);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Vec<N>> dirs;
  for (int i = 0; i < sample_count; ++i) {
    Vec<N> v;
    for (int k = 0; k < N; ++k) v(k) = normal(rng);
    dirs.push_back(v.normalized());
  }
  for (int k = 0; k < N; ++k) dirs.push_back(Vec<N>::Unit(k));
  for (const auto& w : norm.spec().directions) dirs.push_back(Vec<N>(w).normalized());

  r.min_ellipticity = std::numeric_limits<double>::infinity();
  for (const Vec<N>& d : dirs) {
    const Jet<N> fj = norm.jet(d);
    r.euler_residual = std::max(r.euler_residual, std::abs(fj.grad.dot(d) - fj.value) / fj.value);
    r.hessian_null_residual = std::max(r.hessian_null_residual, (fj.hess * d).norm());
    const Mat<N> a = fj.grad * fj.grad.transpose() + fj.value * fj.hess;
    r.min_ellipticity = std::min(r.min_ellipticity, min_eigenvalue<N>(a));

    const double fo = norm.dual_value(d);
    const Vec<N> go = norm.dual_gradient(d);
    r.euler_residual = std::max(r.euler_residual, std::abs(go.dot(d) - fo) / fo);
    r.unit_residual = std::max(r.unit_residual, std::abs(norm.value(go) - 1.0));
    r.unit_residual = std::max(r.unit_residual, std::abs(norm.dual_value(fj.grad) - 1.0));
    r.inversion_residual =
        std::max(r.inversion_residual, (fo * norm.gradient(go) - d).norm());
    r.inversion_residual =
        std::max(r.inversion_residual, (fj.value * norm.dual_gradient(fj.grad) - d).norm());
  }
  r.samples = static_cast<int>(dirs.size());
  r.pass = r.euler_residual < r.tolerance && r.hessian_null_residual < r.tolerance &&
           r.unit_residual < r.tolerance && r.inversion_residual < r.tolerance &&
           r.min_ellipticity > 0.0;
  return r;
}

}  // namespace anicap
