#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace anicap {

template <int N>
using Vec = Eigen::Matrix<double, N, 1>;

template <int N>
using Mat = Eigen::Matrix<double, N, N>;

/// Value, gradient and Hessian of a scalar function at one point.
template <int N>
struct Jet {
  double value = 0.0;
  Vec<N> grad = Vec<N>::Zero();
  Mat<N> hess = Mat<N>::Zero();
};

template <int N>
Jet<N> constant_jet(double c) {
  Jet<N> j;
  j.value = c;
  return j;
}

template <int N>
Jet<N> operator*(const Jet<N>& a, const Jet<N>& b) {
  Jet<N> r;
  r.value = a.value * b.value;
  r.grad = a.value * b.grad + b.value * a.grad;
  r.hess = a.value * b.hess + b.value * a.hess + a.grad * b.grad.transpose() +
           b.grad * a.grad.transpose();
  return r;
}

template <int N>
Jet<N> operator+(const Jet<N>& a, const Jet<N>& b) {
  return {a.value + b.value, a.grad + b.grad, a.hess + b.hess};
}

template <int N>
Jet<N> operator-(const Jet<N>& a, const Jet<N>& b) {
  return {a.value - b.value, a.grad - b.grad, a.hess - b.hess};
}

template <int N>
Jet<N> operator*(double s, const Jet<N>& a) {
  return {s * a.value, s * a.grad, s * a.hess};
}

/// Chain rule for f(a(x)) given f, f', f'' at a(x).
template <int N>
Jet<N> compose(const Jet<N>& a, double f, double df, double d2f) {
  Jet<N> r;
  r.value = f;
  r.grad = df * a.grad;
  r.hess = df * a.hess + d2f * a.grad * a.grad.transpose();
  return r;
}

template <int N>
Jet<N> reciprocal(const Jet<N>& a) {
  const double v = a.value;
  return compose(a, 1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
}

template <int N>
Jet<N> power(const Jet<N>& a, double e) {
  const double v = a.value;
  return compose(a, std::pow(v, e), e * std::pow(v, e - 1.0),
                 e * (e - 1.0) * std::pow(v, e - 2.0));
}

/// Euclidean length |x| as a jet.
template <int N>
Jet<N> euclidean_length_jet(const Vec<N>& x) {
  Jet<N> j;
  j.value = x.norm();
  const Vec<N> u = x / j.value;
  j.grad = u;
  j.hess = (Mat<N>::Identity() - u * u.transpose()) / j.value;
  return j;
}

/// Smallest eigenvalue of a symmetric matrix.
template <int N>
double min_eigenvalue(const Mat<N>& m) {
  Eigen::SelfAdjointEigenSolver<Mat<N>> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

/// Sum of the principal 2x2 minors.
template <int N>
double s2(const Mat<N>& b) {
  const double t = b.trace();
  return 0.5 * (t * t - (b * b).trace());
}

inline void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

}  // namespace anicap
