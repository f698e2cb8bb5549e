#pragma once

// Pointwise checks of the algebraic and differential identities behind the
// monotone quantity: Kato-type identity and its companions on constrained
// Hessian states, divergence identities on analytic potentials, and the sign
// of Theta and div Y_lambda.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "anicap/norms.hpp"

namespace anicap {

/// A gradient surrogate xi and a symmetric U with a_{ij,p}(xi) U_ij = 0.
template <int N>
struct HessianState {
  const NormEvaluator<N>* norm = nullptr;
  double p = 2.0;
  Vec<N> xi = Vec<N>::UnitX();
  Mat<N> u = Mat<N>::Zero();

  double constraint_residual() const {
    const Mat<N> ap = norm->a_p_matrix(xi, p);
    const double scale = ap.norm() * u.norm();
    return scale > 0.0 ? std::abs((ap.cwiseProduct(u)).sum()) / scale : 0.0;
  }
};

template <int N>
HessianState<N> sample_constrained_hessian(const NormEvaluator<N>& norm, double p, const Vec<N>& xi,
                                           std::uint64_t seed) {
  require(xi.norm() > 0.0, "xi must be nonzero");
  require(p > 1.0, "p must exceed 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  HessianState<N> s{&norm, p, xi, Mat<N>::Zero()};
  for (int i = 0; i < N; ++i)
    for (int j = i; j < N; ++j) s.u(i, j) = s.u(j, i) = gauss(rng);
  const Mat<N> ap = norm.a_p_matrix(xi, p);
  s.u -= (ap.cwiseProduct(s.u)).sum() / ap.squaredNorm() * ap;
  s.u = 0.5 * (s.u + s.u.transpose());
  return s;
}

/// Derived scalars at a state. With nu = -xi/|xi| the level-set curvature
/// matrix is M = F_ik U_kj: H_F = -S1(M), sigma_2 = S2(M).
template <int N>
struct LevelSetAlgebra {
  double f = 0.0;          // F(xi)
  Vec<N> fi;               // F_i
  Mat<N> fij;              // F_ij
  Mat<N> a, ap;            // a_ij, a_ij,p
  Vec<N> v;                // F_k U_ki, the gradient of F(grad u)
  double normal_normal = 0; // F_i F_j U_ij
  double h_f = 0.0;        // (p - 1) F^{-1} F_i F_j U_ij
  double h_trace = 0.0;    // -F_ij U_ij
  double sigma1 = 0.0, sigma2 = 0.0;
  double pinch = 0.0;      // (n-2)/(n-1) sigma1^2 - 2 sigma2
  double grad_sq = 0.0;    // |grad F|^2_{a_F}
  double tangential_sq = 0.0;  // |grad^T F|^2_{a_F}
};

template <int N>
LevelSetAlgebra<N> level_set_algebra(const HessianState<N>& s) {
  LevelSetAlgebra<N> g;
  const Jet<N> j = s.norm->jet(s.xi);
  g.f = j.value;
  g.fi = j.grad;
  g.fij = j.hess;
  g.a = s.norm->a_matrix(s.xi);
  g.ap = s.norm->a_p_matrix(s.xi, s.p);
  g.v = s.u * g.fi;
  g.normal_normal = g.fi.dot(g.v);
  g.h_f = (s.p - 1.0) * g.normal_normal / g.f;
  g.h_trace = -(g.fij.cwiseProduct(s.u)).sum();
  const Mat<N> m = g.fij * s.u;
  g.sigma1 = g.h_f;
  g.sigma2 = s2<N>(m);
  g.pinch = (N - 2.0) / (N - 1.0) * g.sigma1 * g.sigma1 - 2.0 * g.sigma2;
  g.grad_sq = g.v.dot(g.a * g.v);
  g.tangential_sq = g.f * g.v.dot(g.fij * g.v);
  return g;
}

struct KatoResidual {
  double kato = 0.0;         // a_ij a_kl u_ik u_jl identity
  double eq221 = 0.0;        // F^{2-p} a_p(v, v) identity
  double eq222 = 0.0;        // F^{4-2p} tr(a_p U a_p U) identity
  double orthogonal = 0.0;   // |grad F|^2 = |grad^T F|^2 + (F_i F_j U_ij)^2
  double mean_curvature = 0.0;  // h_f vs -F_ij U_ij
  double pinch = 0.0;        // sigma form vs tr(M^2) - S1(M)^2/(n-1)
  double max() const { return std::max({kato, eq221, eq222, orthogonal, mean_curvature, pinch}); }
};

namespace detail {
inline double rel_gap(double lhs, double rhs, double scale) {
  const double s = std::max({std::abs(lhs), std::abs(rhs), scale});
  return s > 0.0 ? std::abs(lhs - rhs) / s : 0.0;
}
}  // namespace detail

template <int N>
KatoResidual check_kato(const HessianState<N>& s) {
  const LevelSetAlgebra<N> g = level_set_algebra(s);
  const double n = N, p = s.p, f2 = g.f * g.f;
  const double c = (p - 1.0) * (p - 1.0) / (n - 1.0);
  KatoResidual r;

  const Mat<N> au = g.a * s.u;
  const double lhs = (au * au).trace();
  const double t1 = f2 * g.pinch, t2 = (1.0 + c) * g.grad_sq, t3 = (1.0 - c) * g.tangential_sq;
  r.kato = detail::rel_gap(lhs, t1 + t2 + t3, std::abs(t1) + std::abs(t2) + std::abs(t3));

  const double l221 = std::pow(g.f, 2.0 - p) * g.v.dot(g.ap * g.v);
  const double h2f2 = g.h_f * g.h_f * f2;
  r.eq221 = detail::rel_gap(l221, g.tangential_sq + h2f2 / (p - 1.0), g.tangential_sq + h2f2 / (p - 1.0));

  const Mat<N> apu = g.ap * s.u;
  const double l222 = std::pow(g.f, 4.0 - 2.0 * p) * (apu * apu).trace();
  const double r1 = n / (n - 1.0) * h2f2, r2 = 2.0 * (p - 1.0) * g.tangential_sq, r3 = f2 * g.pinch;
  r.eq222 = detail::rel_gap(l222, r1 + r2 + r3, std::abs(r1) + std::abs(r2) + std::abs(r3));

  const double nn2 = g.normal_normal * g.normal_normal;
  r.orthogonal = detail::rel_gap(g.grad_sq, g.tangential_sq + nn2, g.tangential_sq + nn2);
  r.mean_curvature = detail::rel_gap(g.h_f, g.h_trace, g.fij.norm() * s.u.norm());

  const Mat<N> m = g.fij * s.u;
  const double alt = (m * m).trace() - m.trace() * m.trace() / (n - 1.0);
  r.pinch = detail::rel_gap(g.pinch, alt, (m * m).trace() + m.trace() * m.trace());
  return r;
}

/// Parameters of the monotone quantity used by the vector fields X and Y_lambda.
struct FieldExponents {
  int n = 3;
  double p = 2.0;
  double q = 2.0;
  double pstar() const { return (n - 1.0) * (p - 1.0) / (n - p); }
};

/// Eq for div X in curvature form at a state carrying the potential value u.
template <int N>
double div_x_closed(const HessianState<N>& s, double u, double q) {
  const LevelSetAlgebra<N> g = level_set_algebra(s);
  const FieldExponents e{N, s.p, q};
  const double ps = e.pstar(), p = s.p;
  const double gap = g.h_f - ps * g.f / u;
  const double bracket = g.pinch + (q * (p - 1.0) - 1.0) * g.tangential_sq / (g.f * g.f) +
                         (q - 1.0 - 1.0 / ps) * gap * gap;
  return -(q - 1.0) * std::pow(u, -(q - 1.0) * ps + 2.0) * std::pow(g.f, q * (p - 1.0) - 1.0) * bracket;
}

/// Theta in its sum-of-squares form.
template <int N>
double theta_closed(const HessianState<N>& s, double u, double q) {
  const LevelSetAlgebra<N> g = level_set_algebra(s);
  const double ps = FieldExponents{N, s.p, q}.pstar(), p = s.p;
  const double gap = g.h_f - ps * g.f / u;
  return -(q - 1.0) * (q - 1.0) * std::pow(u, -2.0 * (q - 1.0) * ps + 2.0) *
         std::pow(g.f, (2.0 * q - 1.0) * (p - 1.0) - 1.0) *
         (gap * gap + (p - 1.0) * g.tangential_sq / (g.f * g.f));
}

/// X^j = -(q-1) u^{2-(q-1)p*} F^{q(p-1)-1} (F^{1-p} a_{jk,p} v_k - p* F F_j / u).
template <int N>
Vec<N> x_field(const HessianState<N>& s, double u, double q) {
  const LevelSetAlgebra<N> g = level_set_algebra(s);
  const double ps = FieldExponents{N, s.p, q}.pstar(), p = s.p;
  return -(q - 1.0) * std::pow(u, -(q - 1.0) * ps + 2.0) * std::pow(g.f, q * (p - 1.0) - 1.0) *
         (std::pow(g.f, 1.0 - p) * (g.ap * g.v) - ps * g.f / u * g.fi);
}

/// Theta = <X, grad(u^{-(q-1)p*} F^{(q-1)(p-1)})> by direct contraction.
template <int N>
double theta_direct(const HessianState<N>& s, const Vec<N>& grad_u, double u, double q) {
  const LevelSetAlgebra<N> g = level_set_algebra(s);
  const double ps = FieldExponents{N, s.p, q}.pstar(), p = s.p;
  const double w = std::pow(u, -(q - 1.0) * ps) * std::pow(g.f, (q - 1.0) * (p - 1.0));
  const Vec<N> grad_w = w * (q - 1.0) * ((p - 1.0) * g.v / g.f - ps * grad_u / u);
  return x_field(s, u, q).dot(grad_w);
}

/// Value, gradient and Hessian of a scalar field.
template <int N>
struct FieldJet {
  double u = 0.0;
  Vec<N> grad = Vec<N>::Zero();
  Mat<N> hess = Mat<N>::Zero();
};

template <int N>
using AnalyticField = std::function<FieldJet<N>(const Vec<N>&)>;

/// u = (F°(x)/R)^{-(n-p)/(p-1)}.
template <int N>
AnalyticField<N> wulff_potential_field(const NormEvaluator<N>& norm, double p, double r) {
  const double alpha = (N - p) / (p - 1.0);
  return [&norm, alpha, r](const Vec<N>& x) {
    const Jet<N> d = norm.dual_jet(x);
    const Jet<N> u = compose(d, std::pow(d.value / r, -alpha), -alpha / d.value * std::pow(d.value / r, -alpha),
                             alpha * (alpha + 1.0) / (d.value * d.value) * std::pow(d.value / r, -alpha));
    return FieldJet<N>{u.value, u.grad, u.hess};
  };
}

/// Sum of two unit sources F°(x - c)^{-1} + F°(x + c)^{-1}. For a norm with
/// constant a_ij (Euclidean, ellipsoidal) and p = 2, n = 3 this solves the equation.
template <int N>
AnalyticField<N> two_source_field(const NormEvaluator<N>& norm, const Vec<N>& c) {
  return [&norm, c](const Vec<N>& x) {
    FieldJet<N> out;
    for (double sgn : {-1.0, 1.0}) {
      const Jet<N> d = norm.dual_jet(x + sgn * c);
      const double v = d.value;
      const Jet<N> u = compose(d, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
      out.u += u.value;
      out.grad += u.grad;
      out.hess += u.hess;
    }
    return out;
  };
}

template <int N>
HessianState<N> state_at(const NormEvaluator<N>& norm, double p, const FieldJet<N>& j) {
  return HessianState<N>{&norm, p, j.grad, j.hess};
}

struct DivProbe {
  double eq210 = 0.0;        // max_i |d_j S2^{ij}| / sum_j |d_j S2^{ij}|
  double eq211_lhs = 0.0, eq211_rhs = 0.0, eq211 = 0.0;
  double div_x_fd = 0.0, div_x_closed = 0.0, div_x = 0.0;  // relative gap
  double div_y_fd = 0.0, div_y_closed = 0.0, div_y = 0.0;
  double delta_p = 0.0;      // relative residual of the equation itself
  bool richardson_ok = true;
};

struct DivReport {
  std::vector<DivProbe> probes;
  double max_eq210 = 0.0, max_eq211 = 0.0, max_div_x = 0.0, max_div_y = 0.0;
  bool richardson_ok = true;
};

namespace detail {

// Divergence of a vector field by 5-point differences per axis with step h,
// and the same with h/2; `scale` is sum_j |d_j G^j| + |G(x)|_1 / |x|.
template <int N>
struct FdDivergence {
  double value = 0.0, half = 0.0, scale = 0.0;
};

template <int N, class G>
FdDivergence<N> fd_divergence(const G& field, const Vec<N>& x, double h) {
  FdDivergence<N> out;
  const double base = field(x).template lpNorm<1>() / x.norm();
  for (double step : {h, 0.5 * h}) {
    double div = 0.0, sc = 0.0;
    for (int j = 0; j < N; ++j) {
      const Vec<N> e = step * Vec<N>::Unit(j);
      const double d = (field(x - 2.0 * e)(j) - 8.0 * field(x - e)(j) + 8.0 * field(x + e)(j) -
                        field(x + 2.0 * e)(j)) / (12.0 * step);
      div += d;
      sc += std::abs(d);
    }
    if (step == h) out.value = div, out.scale = sc + base;
    else out.half = div;
  }
  return out;
}

}  // namespace detail

/// Finite-difference checks at probe points of an analytic solution u of the
/// equation: S2^{ij}(W) divergence free, d_j(S2^{ij} V_i) = 2 S2(W), and div X,
/// div Y_lambda against their curvature forms.
template <int N>
DivReport check_div_identities(const NormEvaluator<N>& norm, double p, double q, double lambda,
                               const AnalyticField<N>& field, const std::vector<Vec<N>>& probes,
                               double richardson_tol = 1e-6) {
  require(p > 1.0 && p < N, "identities need 1 < p < n");
  require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
  DivReport rep;
  for (const Vec<N>& x : probes) {
    const double h = 1e-4 * x.norm();
    DivProbe pr;
    const FieldJet<N> j0 = field(x);
    const HessianState<N> s0 = state_at(norm, p, j0);
    const Mat<N> ap0 = norm.a_p_matrix(j0.grad, p);
    pr.delta_p = std::abs((ap0.cwiseProduct(j0.hess)).sum()) / (ap0.norm() * j0.hess.norm());

    auto w_of = [&](const FieldJet<N>& j) -> Mat<N> { return norm.a_p_matrix(j.grad, p) * j.hess; };
    // S2^{ij}(W) = tr(W) delta_ij - W_ji; row i as a vector field in j.
    double worst = 0.0;
    for (int i = 0; i < N; ++i) {
      auto row = [&](const Vec<N>& y) -> Vec<N> {
        const Mat<N> w = w_of(field(y));
        return w.trace() * Vec<N>::Unit(i) - w.col(i);
      };
      const auto d = detail::fd_divergence<N>(row, x, h);
      worst = std::max(worst, d.scale > 0.0 ? std::abs(d.half) / d.scale : 0.0);
      if (std::abs(d.value - d.half) > richardson_tol * std::max(d.scale, 1e-300)) pr.richardson_ok = false;
    }
    pr.eq210 = worst;

    auto sv = [&](const Vec<N>& y) -> Vec<N> {
      const FieldJet<N> j = field(y);
      const Mat<N> w = w_of(j);
      const Mat<N> s2 = w.trace() * Mat<N>::Identity() - w.transpose();
      double f;
      Vec<N> fx;
      norm.value_gradient(j.grad, f, fx);
      return s2.transpose() * (std::pow(f, p - 1.0) * fx);  // component j: S^{ij} V_i
    };
    const auto d211 = detail::fd_divergence<N>(sv, x, h);
    const Mat<N> w0 = w_of(j0);
    pr.eq211_lhs = d211.half;
    pr.eq211_rhs = -(w0 * w0).trace();
    pr.eq211 = detail::rel_gap(pr.eq211_lhs, pr.eq211_rhs, d211.scale);
    if (std::abs(d211.value - d211.half) > richardson_tol * std::max(d211.scale, 1e-300)) pr.richardson_ok = false;

    auto xf = [&](const Vec<N>& y) -> Vec<N> {
      const FieldJet<N> j = field(y);
      return x_field(state_at(norm, p, j), j.u, q);
    };
    const auto dx = detail::fd_divergence<N>(xf, x, h);
    pr.div_x_fd = dx.half;
    pr.div_x_closed = div_x_closed(s0, j0.u, q);
    // X may vanish identically (Wulff potentials); compare against its two terms.
    const LevelSetAlgebra<N> g0 = level_set_algebra(s0);
    const double ps0 = FieldExponents{N, p, q}.pstar();
    const double x_terms = (q - 1.0) * std::pow(j0.u, -(q - 1.0) * ps0 + 2.0) *
                           std::pow(g0.f, q * (p - 1.0) - 1.0) *
                           (std::pow(g0.f, 1.0 - p) * (g0.ap * g0.v).norm() + ps0 * g0.f / j0.u * g0.fi.norm()) /
                           x.norm();
    pr.div_x = detail::rel_gap(pr.div_x_fd, pr.div_x_closed, dx.scale + x_terms);
    if (std::abs(dx.value - dx.half) > richardson_tol * (dx.scale + x_terms)) pr.richardson_ok = false;

    // Y_lambda = (1/u - lambda) X - F^{q(p-1)} u^{-(q-1)p*} F_xi(grad u).
    const double ps = FieldExponents{N, p, q}.pstar();
    auto yf = [&](const Vec<N>& y) -> Vec<N> {
      const FieldJet<N> j = field(y);
      double f;
      Vec<N> fx;
      norm.value_gradient(j.grad, f, fx);
      return (1.0 / j.u - lambda) * x_field(state_at(norm, p, j), j.u, q) -
             std::pow(f, q * (p - 1.0)) * std::pow(j.u, -(q - 1.0) * ps) * fx;
    };
    const auto dy = detail::fd_divergence<N>(yf, x, h);
    pr.div_y_fd = dy.half;
    pr.div_y_closed = (1.0 / j0.u - lambda) * pr.div_x_closed;
    pr.div_y = detail::rel_gap(pr.div_y_fd, pr.div_y_closed, dy.scale + std::abs(1.0 / j0.u - lambda) * x_terms);
    if (std::abs(dy.value - dy.half) > richardson_tol * std::max(dy.scale, 1e-300)) pr.richardson_ok = false;

    rep.max_eq210 = std::max(rep.max_eq210, pr.eq210);
    rep.max_eq211 = std::max(rep.max_eq211, pr.eq211);
    rep.max_div_x = std::max(rep.max_div_x, pr.div_x);
    rep.max_div_y = std::max(rep.max_div_y, pr.div_y);
    rep.richardson_ok = rep.richardson_ok && pr.richardson_ok;
    rep.probes.push_back(pr);
  }
  return rep;
}

struct SignReport {
  int samples = 0;
  int theta_violations = 0;   // Theta > 1e-12 (relative)
  int div_x_violations = 0;   // div X > 1e-12 (relative)
  int div_y_violations = 0;   // div Y_lambda > 1e-12 (relative)
  double max_theta = -1e300;  // largest Theta / scale
  double max_div_y = -1e300;
  double theta_consistency = 0.0;  // direct contraction vs sum-of-squares form
  double min_tangential_coefficient = 0.0;  // q(p-1) - 1
  double min_gap_coefficient = 0.0;         // q - 1 - 1/p*
};

/// Theta and div Y_lambda at random constrained states with u drawn from (0, 1).
template <int N>
SignReport check_sign_fields(const NormEvaluator<N>& norm, double p, double q, double lambda, int count,
                             std::uint64_t seed) {
  const FieldExponents e{N, p, q};
  require(p > 1.0 && p < N, "identities need 1 < p < n");
  require(q >= (1.0 + 1.0 / e.pstar()) * (1.0 - 1e-12), "q must satisfy q >= 1 + 1/p*");
  require(lambda > 0.0 && lambda < 1.0, "lambda must lie in (0, 1)");
  SignReport rep;
  rep.min_tangential_coefficient = q * (p - 1.0) - 1.0;
  rep.min_gap_coefficient = q - 1.0 - 1.0 / e.pstar();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    Vec<N> xi;
    for (int i = 0; i < N; ++i) xi(i) = gauss(rng);
    const HessianState<N> s = sample_constrained_hessian(norm, p, xi, rng());
    double u = unit(rng);
    while (u <= 0.0) u = unit(rng);
    // grad u is xi; scale-free comparisons use the magnitude of the squares.
    const LevelSetAlgebra<N> g = level_set_algebra(s);
    const double ps = e.pstar();
    const double gap = g.h_f - ps * g.f / u;
    const double squares = gap * gap + (p - 1.0) * std::abs(g.tangential_sq) / (g.f * g.f) +
                           std::abs(g.pinch) + g.h_f * g.h_f;
    const double theta = theta_closed(s, u, q);
    const double theta_scale = (q - 1.0) * (q - 1.0) * std::pow(u, -2.0 * (q - 1.0) * ps + 2.0) *
                               std::pow(g.f, (2.0 * q - 1.0) * (p - 1.0) - 1.0) * squares;
    const double direct = theta_direct(s, xi, u, q);
    rep.theta_consistency = std::max(rep.theta_consistency, detail::rel_gap(direct, theta, theta_scale));
    const double div_x = div_x_closed(s, u, q);
    const double div_y = (1.0 / u - lambda) * div_x;
    const double x_scale = (q - 1.0) * std::pow(u, -(q - 1.0) * ps + 2.0) *
                             std::pow(g.f, q * (p - 1.0) - 1.0) * squares;
    const double t_rel = theta_scale > 0.0 ? theta / theta_scale : 0.0;
    const double div_scale = std::abs(1.0 / u - lambda) * x_scale;
    const double y_rel = div_scale > 0.0 ? div_y / div_scale : 0.0;
    if (x_scale > 0.0 && div_x / x_scale > 1e-12) ++rep.div_x_violations;
    rep.max_theta = std::max(rep.max_theta, t_rel);
    rep.max_div_y = std::max(rep.max_div_y, y_rel);
    if (t_rel > 1e-12) ++rep.theta_violations;
    // div Y_lambda <= 0 needs u < 1/lambda, which holds for u in (0, 1).
    if (y_rel > 1e-12) ++rep.div_y_violations;
    ++rep.samples;
  }
  return rep;
}

}  // namespace anicap
