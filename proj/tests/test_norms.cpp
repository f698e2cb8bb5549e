#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "anicap/norms.hpp"
#include "oracles.hpp"

using namespace anicap;
using V3 = Vec<3>;

namespace {

Eigen::MatrixXd diag3(double a, double b, double c) {
  return Eigen::Vector3d(a, b, c).asDiagonal();
}

std::vector<NormSpec> all_families() {
  Eigen::MatrixXd a(3, 3);
  a << 2.0, 0.3, -0.2, 0.3, 1.5, 0.1, -0.2, 0.1, 3.0;
  return {NormSpec::euclidean(3), NormSpec::ellipsoid(a), NormSpec::power(3, 4.0),
          NormSpec::power(3, 1.5), NormSpec::cube(3, 4, 0.05)};
}

V3 random_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return V3(n(rng), n(rng), n(rng));
}

}  // namespace

TEST(Norms, EuclideanValues) {
  const auto f = make_norm<3>(NormSpec::euclidean(3));
  EXPECT_DOUBLE_EQ(f.value(V3(3, 4, 0)), 5.0);
  EXPECT_TRUE(f.gradient(V3(3, 4, 0)).isApprox(V3(0.6, 0.8, 0.0)));
  EXPECT_TRUE(f.hessian(V3(1, 0, 0)).isApprox(Vec<3>(0, 1, 1).asDiagonal().toDenseMatrix()));
  EXPECT_DOUBLE_EQ(f.dual_value(V3(0, 0, 2)), 2.0);
  EXPECT_TRUE(f.dual_gradient(V3(3, 4, 0)).isApprox(V3(0.6, 0.8, 0.0)));
  EXPECT_TRUE(f.a_matrix(V3(0.3, -2, 1)).isApprox(Mat<3>::Identity()));
  EXPECT_TRUE(f.a_p_matrix(V3(0.3, -2, 1), 2.0).isApprox(Mat<3>::Identity()));
}

TEST(Norms, EllipsoidAndPowerDefinitions) {
  const auto e = make_norm<3>(NormSpec::ellipsoid(diag3(1, 4, 9)));
  const V3 x(0.5, -1.0, 2.0);
  EXPECT_NEAR(e.value(x), std::sqrt(0.25 + 4 + 36), 1e-14);
  const auto p = make_norm<3>(NormSpec::power(3, 4.0));
  EXPECT_NEAR(p.value(x), std::pow(std::pow(0.5, 4) + 1 + 16, 0.25), 1e-14);
  EXPECT_NEAR(p.value(V3(1, 1, 1)), std::pow(3.0, 0.25), 1e-14);
}

TEST(Norms, PowerGradientMatchesFiniteDifferences) {
  const auto p = make_norm<3>(NormSpec::power(3, 4.0));
  const V3 x(1, 1, 1);
  const V3 fd = oracle::fd_gradient([&](const V3& y) { return p.value(y); }, x);
  EXPECT_LT((p.gradient(x) - fd).norm(), 1e-7);
}

TEST(Norms, HessiansMatchFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (const auto& spec : all_families()) {
    const auto f = make_norm<3>(spec);
    for (int i = 0; i < 20; ++i) {
      const V3 x = random_vector(rng);
      // Power norms with q < 2 have Hessians that blow up near coordinate planes.
      if (x.cwiseAbs().minCoeff() < 0.3) continue;
      const Mat<3> fd = oracle::fd_hessian([&](const V3& y) { return 0.5 * std::pow(f.value(y), 2); }, x);
      const Mat<3> a = f.a_matrix(x);
      EXPECT_LT((a - fd).norm(), 1e-6 * a.norm()) << spec.describe();
      EXPECT_LT((f.hessian(x) - f.hessian(x).transpose()).norm(), 1e-12);
    }
  }
}

TEST(Norms, DualClosedFormsMatchSphereSup) {
  const auto e = make_norm<3>(NormSpec::ellipsoid(diag3(1, 4, 9)));
  const V3 x(0, 2, 0);
  EXPECT_NEAR(e.dual_value(x), 1.0, 1e-14);
  const double sup_e = oracle::sphere_sup([&](const V3& d) { return d.dot(x) / e.value(d); });
  EXPECT_NEAR(sup_e, 1.0, 1e-6);

  const auto p = make_norm<3>(NormSpec::power(3, 4.0));
  const V3 ones(1, 1, 1);
  EXPECT_NEAR(p.dual_value(ones), std::pow(3.0, 0.75), 1e-12);
  const double sup_p = oracle::sphere_sup([&](const V3& d) { return d.dot(ones) / p.value(d); });
  EXPECT_NEAR(sup_p, std::pow(3.0, 0.75), 1e-6);
}

TEST(Norms, NumericalDualMatchesSphereSup) {
  const auto f = make_norm<3>(NormSpec::cube(3, 4, 0.05));
  ASSERT_FALSE(f.closed_form_dual());
  for (const V3& x : {V3(1, 0.2, -0.3), V3(0.1, 0.1, 2.0), V3(1, 1, 1)}) {
    const double sup = oracle::sphere_sup([&](const V3& d) { return d.dot(x) / f.value(d); });
    EXPECT_NEAR(f.dual_value(x), sup, 1e-6 * sup);
    // The sup formula bounds every probe.
    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
      const V3 xi = random_vector(rng);
      EXPECT_GE(f.dual_value(x) * (1 + 1e-12), xi.dot(x) / f.value(xi));
    }
  }
}

TEST(Norms, DualGradientInversion) {
  std::mt19937_64 rng(11);
  for (const auto& spec : all_families()) {
    const auto f = make_norm<3>(spec);
    for (int i = 0; i < 20; ++i) {
      const V3 x = random_vector(rng);
      const V3 g = f.dual_gradient(x);
      EXPECT_NEAR(f.value(g), 1.0, 1e-6) << spec.describe();
      EXPECT_LT((f.dual_value(x) * f.gradient(g) - x).norm(), 1e-6 * x.norm());
      EXPECT_LT((f.value(x) * f.dual_gradient(f.gradient(x)) - x).norm(), 1e-6 * x.norm());
    }
  }
}

TEST(Norms, DualHessianMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  for (const auto& spec : all_families()) {
    const auto f = make_norm<3>(spec);
    for (int i = 0; i < 5; ++i) {
      const V3 x = random_vector(rng);
      const Mat<3> fd = oracle::fd_hessian([&](const V3& y) { return f.dual_value(y); }, x);
      const Mat<3> h = f.dual_hessian(x);
      EXPECT_LT((h - fd).norm(), 1e-5 * (1 + h.norm())) << spec.describe();
    }
  }
}

TEST(Norms, PropertyIdentitiesOverRandomSamples) {
  std::mt19937_64 rng(17);
  const auto fams = all_families();
  std::uniform_int_distribution<std::size_t> pick(0, fams.size() - 1);
  std::vector<NormEvaluator<3>> evals;
  for (const auto& s : fams) evals.emplace_back(s);
  for (int i = 0; i < 1000; ++i) {
    const auto& f = evals[pick(rng)];
    const V3 xi = random_vector(rng);
    const Jet<3> j = f.jet(xi);
    EXPECT_LT(std::abs(j.grad.dot(xi) - j.value), 1e-9 * j.value);
    EXPECT_LT((j.hess * xi).norm(), 1e-9);
    EXPECT_LT(std::abs(f.value(f.dual_gradient(xi)) - 1.0), 1e-6);
    EXPECT_LT(std::abs(f.dual_value(j.grad) - 1.0), 1e-6);
    for (double t : {-2.0, 0.5, 10.0})
      EXPECT_NEAR(f.value(t * xi), std::abs(t) * j.value, 1e-12 * std::abs(t) * j.value);
  }
}

TEST(Norms, DualOfDualRecoversNorm) {
  // (F°)°(xi) = sup_x <xi,x>/F°(x), evaluated by the sphere-search oracle.
  std::mt19937_64 rng(19);
  const auto f = make_norm<3>(NormSpec::cube(3, 4, 0.05));
  for (int i = 0; i < 100; ++i) {
    const V3 xi = random_vector(rng);
    // Cheap local refinement from the known maximiser direction keeps this fast.
    const V3 start = f.gradient(xi).normalized();
    double best = xi.dot(start) / f.dual_value(start);
    V3 cur = start;
    double step = 0.05;
    for (int it = 0; it < 60; ++it) {
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        for (double s : {step, -step}) {
          V3 trial = cur;
          trial(k) += s;
          const double v = xi.dot(trial) / f.dual_value(trial);
          if (v > best) best = v, cur = trial, moved = true;
        }
      }
      if (!moved) step *= 0.5;
    }
    EXPECT_NEAR(best, f.value(xi), 1e-5 * f.value(xi));
  }
}

TEST(Norms, ApMatrixPositiveDefinite) {
  std::mt19937_64 rng(23);
  for (const auto& spec : all_families()) {
    const auto f = make_norm<3>(spec);
    for (double p : {1.2, 2.0, 2.8})
      for (int i = 0; i < 100; ++i)
        EXPECT_GT(min_eigenvalue<3>(f.a_p_matrix(random_vector(rng), p)), 0.0) << spec.describe();
  }
}

TEST(Norms, ConstructionErrors) {
  EXPECT_THROW(make_norm<3>(NormSpec::ellipsoid(diag3(1, -1, 2))), std::invalid_argument);
  Eigen::MatrixXd nonsym = diag3(1, 1, 1);
  nonsym(0, 1) = 0.5;
  EXPECT_THROW(make_norm<3>(NormSpec::ellipsoid(nonsym)), std::invalid_argument);
  EXPECT_THROW(make_norm<3>(NormSpec::power(3, 1.0)), std::invalid_argument);
  EXPECT_THROW(make_norm<3>(NormSpec::power(3, 0.5)), std::invalid_argument);
  std::vector<Eigen::VectorXd> planar = {Eigen::Vector3d(1, 0, 0), Eigen::Vector3d(0, 1, 0),
                                         Eigen::Vector3d(1, 1, 0)};
  EXPECT_THROW(make_norm<3>(NormSpec::smoothed_polytope(planar, 4, 0.05)), std::invalid_argument);
  EXPECT_THROW(make_norm<3>(NormSpec::cube(3, 5, 0.05)), std::invalid_argument);
  EXPECT_THROW(make_norm<3>(NormSpec::euclidean(2)), std::invalid_argument);
  const auto f = make_norm<3>(NormSpec::euclidean(3));
  EXPECT_THROW(f.value(V3::Zero()), std::invalid_argument);
  EXPECT_THROW(f.dual_value(V3::Zero()), std::invalid_argument);
}

TEST(Norms, ValidationReports) {
  const auto euc = validate_norm(make_norm<3>(NormSpec::euclidean(3)), 1000);
  EXPECT_TRUE(euc.pass);
  EXPECT_LT(euc.euler_residual, 1e-12);
  EXPECT_LT(euc.unit_residual, 1e-12);
  EXPECT_LT(euc.inversion_residual, 1e-12);

  const auto poly = validate_norm(make_norm<3>(NormSpec::cube(3, 4, 0.05)), 1000);
  EXPECT_TRUE(poly.pass);
  EXPECT_GT(poly.min_ellipticity, 0.0);

  const auto crystalline = validate_norm(make_norm<3>(NormSpec::cube(3, 4, 0.0)), 1000);
  EXPECT_LE(crystalline.min_ellipticity, 0.0);
  EXPECT_FALSE(crystalline.pass);
}

TEST(Norms, TwoDimensional) {
  const auto f = make_norm<2>(NormSpec::power(2, 3.0));
  const Vec<2> x(0.7, -1.3);
  EXPECT_NEAR(f.value(f.dual_gradient(x)), 1.0, 1e-12);
  EXPECT_LT((f.dual_value(x) * f.gradient(f.dual_gradient(x)) - x).norm(), 1e-12);
}
