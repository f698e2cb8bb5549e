#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

#include "anicap/functionals.hpp"

using namespace anicap;

namespace {

using NormPtr = std::shared_ptr<const NormEvaluator<3>>;

NormPtr norm3(const NormSpec& s) { return std::make_shared<const NormEvaluator<3>>(s); }

Eigen::MatrixXd diag3(double a, double b, double c) { return Eigen::Vector3d(a, b, c).asDiagonal(); }

SolverConfig small(int nr = 32, int nt = 16) {
  SolverConfig c;
  c.radial = nr;
  c.angular = {nt, 2 * nt};
  return c;
}

// Field sampled from u = (F°(x)/R)^{-alpha} on the grid of W_R; no solve.
PotentialField<3> analytic_field(const StarDomain<3>& d, const NormEvaluator<3>& f, double p, double r,
                                 int nr = 48, int nt = 24) {
  PotentialField<3> field;
  field.grid = std::make_shared<const AnnularGrid<3>>(d, 8.0 * d.max_radius(), nr, SphereResolution{nt, 2 * nt});
  field.p = p;
  field.norm = f.spec();
  field.u.resize(field.grid->node_count());
  for (int n = 0; n < field.grid->node_count(); ++n)
    field.u[n] = std::min(1.0, analytic_wulff_potential(f, p, r * (1.0 - 1e-13), field.grid->position(n)));
  field.report.converged = true;
  field.report.max_principle = true;
  return field;
}

double prolate_capacity(double a, double b) {
  const double c = std::sqrt(a * a - b * b);
  return 4.0 * std::numbers::pi * c / std::acosh(a / b);
}

}  // namespace

TEST(Capacity, EuclideanUnitBallPTwo) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::wulff(1.0), f);
  const auto field = solve_potential(d, *f, 2.0, small());
  const CapacityResult c = capacity(field, d, *f);
  const double exact = 4.0 * std::numbers::pi;
  EXPECT_NEAR(c.cap_energy, exact, 0.015 * exact);
  EXPECT_NEAR(c.cap_flux, exact, 0.015 * exact);
  EXPECT_LT(c.discrepancy, 0.02);
  EXPECT_DOUBLE_EQ(c.gamma, c.cap_flux);
  EXPECT_EQ(c.p, 2.0);
  EXPECT_FALSE(c.tail_method.empty());
}

TEST(Capacity, PowerNormWulffPOneAndHalf) {
  const auto f = norm3(NormSpec::power(3, 4.0));
  const StarDomain<3> d(DomainSpec::wulff(1.0), f);
  const auto field = solve_potential(d, *f, 1.5, small());
  const CapacityResult c = capacity(field, d, *f);
  const double exact = kappa(*f) * std::sqrt(3.0);
  EXPECT_NEAR(c.cap_flux, exact, 0.02 * exact);
  EXPECT_NEAR(c.cap_energy, exact, 0.02 * exact);
  EXPECT_NEAR(c.gamma, std::pow(c.cap_flux, 2.0), 1e-12 * c.gamma);
}

TEST(Capacity, ScalingWithRadius) {
  const auto f = norm3(NormSpec::ellipsoid(diag3(1, 4, 9)));
  const StarDomain<3> d1(DomainSpec::wulff(1.0), f), d2(DomainSpec::wulff(2.0), f);
  const double p = 2.5;
  const double c1 = capacity_flux(solve_potential(d1, *f, p, small()), d1, *f);
  const double c2 = capacity_flux(solve_potential(d2, *f, p, small()), d2, *f);
  EXPECT_NEAR(c2 / c1, std::pow(2.0, 3.0 - p), 0.01 * std::pow(2.0, 3.0 - p));
}

TEST(Capacity, ProlateSpheroidClosedForm) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::ellipsoid({1, 1, 3}), f);
  const auto field = solve_potential(d, *f, 2.0, small());
  const CapacityResult c = capacity(field, d, *f);
  const double exact = prolate_capacity(3.0, 1.0);
  EXPECT_NEAR(c.cap_flux, exact, 0.02 * exact);
  EXPECT_LT(c.discrepancy, 0.02);
}

TEST(Capacity, RejectsUnconvergedField) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::ball(1.0));
  auto field = analytic_field(StarDomain<3>(DomainSpec::wulff(1.0), f), *f, 2.0, 1.0, 8, 4);
  field.report.converged = false;
  EXPECT_THROW(capacity_energy(field), std::invalid_argument);
  EXPECT_THROW(capacity_flux(field, d, *f), std::invalid_argument);
}

TEST(PhiParams, AdmissibleSet) {
  PhiParams c{3, 2.0, 1.5};
  EXPECT_DOUBLE_EQ(c.pstar(), 2.0);
  EXPECT_TRUE(c.admissible());
  c.q = 1.49;
  EXPECT_FALSE(c.admissible());
  EXPECT_THROW(c.validate(), std::invalid_argument);
  // p = 1.5: p* = 2/3, so q >= 2.5.
  const PhiParams d = PhiParams::with_default_q(3, 1.5);
  EXPECT_NEAR(d.q, 2.5, 1e-12);
  EXPECT_TRUE(d.admissible());
  EXPECT_DOUBLE_EQ(PhiParams::with_default_q(3, 2.0).q, 2.0);
  EXPECT_THROW((PhiParams{3, 3.0, 2.0}.validate()), std::invalid_argument);
}

TEST(PhiLimit, ClosedForms) {
  const double k = 4.0 * std::numbers::pi;
  EXPECT_NEAR(phi_limit(7.3, k, PhiParams{3, 1.7, 1.0}), 7.3, 1e-12);
  EXPECT_NEAR(phi_limit(k, k, PhiParams{3, 2.0, 2.0}), k, 1e-12);
  for (double p : {1.5, 2.0, 2.5}) {
    const PhiParams c = PhiParams::with_default_q(3, p);
    const double cap = wulff_capacity(3, 5.0, p);
    EXPECT_NEAR(phi_limit(cap, 5.0, c), 5.0 * std::pow((3 - p) / (p - 1), c.q * (p - 1)), 1e-10);
  }
  EXPECT_THROW(phi_limit(0.0, k, PhiParams{}), std::invalid_argument);
}

TEST(PhiCurve, ConstantOnAnalyticWulffPotential) {
  for (const auto& spec : {NormSpec::euclidean(3), NormSpec::power(3, 4.0),
                           NormSpec::ellipsoid(diag3(1, 4, 9))}) {
    const auto f = norm3(spec);
    const StarDomain<3> d(DomainSpec::wulff(1.0), f);
    for (double p : {1.5, 2.5}) {
      const auto field = analytic_field(d, *f, p, 1.0);
      const PhiParams c = PhiParams::with_default_q(3, p);
      const double k = kappa(*f);
      const double expected = k * std::pow((3 - p) / (p - 1), c.q * (p - 1));
      const PhiCurve curve = phi_curve(field, *f, c, tau_grid(max_tau(field)), wulff_capacity(3, k, p));
      // The power norm's Wulff shape is only C^1 across the coordinate planes.
      const double tol = spec.family == NormFamily::PowerNorm ? 5e-3 : 2e-3;
      for (double v : curve.phi) EXPECT_NEAR(v, expected, tol * expected) << spec.describe() << " p=" << p;
      EXPECT_NEAR(curve.limit, expected, 1e-3 * expected);
    }
  }
}

// Level sets of an ellipsoidal potential measured with the Euclidean norm:
// compare against boundary quadrature of the same ellipsoid with exact normals.
TEST(PhiCurve, RayLevelSetsMatchBoundaryQuadrature) {
  const auto shape = norm3(NormSpec::ellipsoid(diag3(1, 2, 5)));
  const auto euclid = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::wulff(1.0), shape);
  const double p = 2.0;
  const auto field = analytic_field(d, *shape, p, 1.0);
  const PhiParams c{3, p, 2.0};
  const double alpha = 1.0;
  for (double tau : {1.0, 1.7, 3.0}) {
    const double r = std::pow(tau, 1.0 / alpha);
    const StarDomain<3> level(DomainSpec::wulff(r), shape);
    double integral = 0.0;
    for (const auto& s : boundary_quadrature(level, {48, 96})) {
      const Vec<3> grad = -alpha * std::pow(shape->dual_value(s.x), -alpha - 1.0) *
                          shape->dual_gradient(s.x);
      integral += std::pow(grad.norm(), c.q * (p - 1.0)) * s.weight;
    }
    const double expected = std::pow(tau, (c.q - 1.0) * c.pstar()) * integral;
    EXPECT_NEAR(phi_value(field, *euclid, c, tau), expected, 2e-3 * expected) << "tau=" << tau;
  }
}

TEST(PhiCurve, UnitTauWithQOneIsFluxCapacity) {
  const auto f = norm3(NormSpec::power(3, 4.0));
  const StarDomain<3> d(DomainSpec::ellipsoid({1.0, 1.2, 1.5}), f);
  const auto field = solve_potential(d, *f, 2.0, small());
  const PhiParams c{3, 2.0, 1.0};
  // Phi(1) at q = 1 is the flux integral; only the normals differ (finite differences vs exact).
  EXPECT_NEAR(phi_value(field, *f, c, 1.0), capacity_flux(field, d, *f), 2e-3 * capacity_flux(field, d, *f));
}

TEST(PhiCurve, SolvedWulffPotentialNearlyConstant) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::wulff(1.0), f);
  const auto field = solve_potential(d, *f, 2.0, small(48, 24));
  const PhiParams c{3, 2.0, 2.0};
  const double cap = capacity_flux(field, d, *f);
  const PhiCurve curve = phi_curve(field, *f, c, tau_grid(max_tau(field)), cap);
  const double expected = 4.0 * std::numbers::pi;
  ASSERT_EQ(curve.phi.size(), 20u);
  for (double v : curve.phi) EXPECT_NEAR(v, expected, 0.02 * expected);
  EXPECT_LE(curve.max_violation, 1e-3 * curve.phi_one);
  EXPECT_NEAR(curve.phi.back(), curve.limit, 0.03 * curve.limit);
  EXPECT_LE(curve.slope_at_one * curve.step, 1e-3 * curve.phi_one);
}

TEST(PhiCurve, CoAreaAgreesAwayFromBoundary) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::ellipsoid({1, 1, 2}), f);
  const auto field = solve_potential(d, *f, 2.0, small());
  const PhiParams c{3, 2.0, 2.0};
  for (double tau : {2.0, 4.0}) {
    const double rays = phi_value(field, *f, c, tau, PhiMethod::Rays);
    const double coarea = phi_value(field, *f, c, tau, PhiMethod::CoArea);
    EXPECT_NEAR(coarea, rays, 0.05 * rays) << "tau=" << tau;
  }
}

TEST(PhiCurve, RejectsInfeasibleTauRange) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::wulff(1.0), f);
  const auto field = analytic_field(d, *f, 2.0, 1.0, 16, 8);
  const PhiParams c{3, 2.0, 2.0};
  const double big = 2.0 * max_tau(field, 0.95);
  EXPECT_THROW(phi_curve(field, *f, c, {1.0, big}, 1.0), std::invalid_argument);
  EXPECT_THROW(phi_curve(field, *f, c, {2.0, 1.5}, 1.0), std::invalid_argument);
  EXPECT_THROW(phi_curve(field, *f, PhiParams{3, 2.0, 1.2}, {1.0, 1.5}, 1.0), std::invalid_argument);
  const auto t = tau_grid(10.0, 5);
  EXPECT_DOUBLE_EQ(t.front(), 1.0);
  EXPECT_DOUBLE_EQ(t.back(), 10.0);
  EXPECT_NEAR(t[2], std::sqrt(10.0), 1e-12);
}

TEST(Inequalities, EqualityOnWulffBalls) {
  for (const auto& spec : {NormSpec::euclidean(3), NormSpec::power(3, 4.0),
                           NormSpec::ellipsoid(diag3(1, 4, 9))}) {
    const auto f = norm3(spec);
    for (double r : {1.0, 1.7}) {
      const StarDomain<3> d(DomainSpec::wulff(r), f);
      const double p = 2.0;
      const double cap = wulff_capacity(3, kappa(*f), p, r);
      const InequalityReport rep = verify_inequalities(d, *f, PhiParams{3, p, 2.0}, cap);
      EXPECT_TRUE(rep.convex);
      EXPECT_LT(rep.consistency, 1e-10);
      ASSERT_EQ(rep.records.size(), 7u);
      for (const auto& rec : rep.records) {
        EXPECT_EQ(rec.verdict, "pass") << rec.name;
        EXPECT_NEAR(rec.ratio, 1.0, 0.02) << spec.describe() << " " << rec.name;
      }
    }
  }
}

TEST(Inequalities, EqOneTwoClosedFormOnScaledWulff) {
  const auto f = norm3(NormSpec::euclidean(3));
  const double r = 2.0, p = 1.5;
  const StarDomain<3> d(DomainSpec::wulff(r), f);
  const auto rep = verify_inequalities(d, *f, PhiParams::with_default_q(3, p), wulff_capacity(3, kappa(*f), p, r));
  const auto* rec = rep.find("eq1.02");
  ASSERT_NE(rec, nullptr);
  EXPECT_NEAR(rec->lhs, std::pow(r, 3 - 1 - p), 1e-6);
  EXPECT_NEAR(rec->rhs, std::pow(r, 3 - p - 1), 1e-6);
  const auto* w = rep.find("willmore");
  EXPECT_NEAR(w->lhs, 4.0 * std::numbers::pi, 1e-6);
}

TEST(Inequalities, StrictOnProlateSpheroid) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::ellipsoid({1, 1, 3}), f);
  const auto rep = verify_inequalities(d, *f, PhiParams{3, 2.0, 2.0}, prolate_capacity(3.0, 1.0));
  EXPECT_TRUE(rep.convex);
  for (const auto& rec : rep.records) EXPECT_GT(rec.ratio, 1.0) << rec.name;
}

TEST(Inequalities, SkipsOutsideAdmissibleSetAndNonConvex) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> bumpy(DomainSpec::perturbed_wulff(1.0, 0.4, "l4m0"), f);
  const auto rep = verify_inequalities(bumpy, *f, PhiParams{3, 1.5, 2.0}, 10.0);
  EXPECT_FALSE(rep.convex);
  EXPECT_EQ(rep.find("eq1.03-convex")->verdict, "skipped");
  EXPECT_EQ(rep.find("eq4.09")->verdict, "skipped");
  EXPECT_EQ(rep.find("eq5.11")->verdict, "skipped");
  EXPECT_EQ(rep.find("willmore")->verdict, "pass");
  EXPECT_THROW(verify_inequalities(bumpy, *f, PhiParams{3, 2.0, 2.0}, -1.0), std::invalid_argument);
}

TEST(Sweep, WulffRatiosDecreaseTowardsOne) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::wulff(1.0), f);
  SolverConfig cfg = small(48, 12);
  cfg.r_out_factor = 0.0;
  const SweepTable t = capacity_p_sweep(d, *f, {1.05, 1.5, 1.2}, cfg);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_DOUBLE_EQ(t.rows[0].p, 1.5);
  EXPECT_DOUBLE_EQ(t.rows[2].p, 1.05);
  EXPECT_TRUE(t.convex);
  EXPECT_TRUE(t.monotone);
  EXPECT_EQ(t.verdict, "pass");
  for (const auto& r : t.rows) {
    EXPECT_TRUE(r.converged) << "p=" << r.p;
    EXPECT_NEAR(r.target, 4.0 * std::numbers::pi, 1e-8);
    EXPECT_NEAR(r.ratio, r.closed_form, 0.03 * r.closed_form) << "p=" << r.p;
  }
  EXPECT_NEAR(t.rows[0].closed_form, std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(t.rows[1].closed_form, std::pow(9.0, 0.2), 1e-12);
  EXPECT_NEAR(std::pow(2.0 / 0.01, 0.01), 1.054, 1e-3);
}

TEST(Sweep, NonConvexDomainUnflagged) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> d(DomainSpec::perturbed_wulff(1.0, 0.4, "l4m0"), f);
  const SweepTable t = capacity_p_sweep(d, *f, {2.0}, small(16, 8));
  EXPECT_FALSE(t.convex);
  EXPECT_EQ(t.verdict, "unflagged");
  EXPECT_EQ(t.rows[0].closed_form, 0.0);
  EXPECT_GT(t.rows[0].ratio, 0.0);
}
