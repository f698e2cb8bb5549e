#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numbers>

#include "anicap/solver.hpp"
#include "anicap/wulff.hpp"

using namespace anicap;
using V3 = Vec<3>;

namespace {

std::shared_ptr<const NormEvaluator<3>> norm3(const NormSpec& s) {
  return std::make_shared<const NormEvaluator<3>>(s);
}

Eigen::MatrixXd diag3(double a, double b, double c) {
  return Eigen::Vector3d(a, b, c).asDiagonal();
}

SolverConfig small(int nr = 16, int nt = 8) {
  SolverConfig c;
  c.radial = nr;
  c.angular = {nt, 2 * nt};
  return c;
}

// Linear interpolation along ray a in r.
double along_ray(const PotentialField<3>& f, int a, double r) {
  const auto& g = *f.grid;
  for (int i = 0; i + 1 < g.radial_count(); ++i) {
    const double r0 = g.radius(i, a), r1 = g.radius(i + 1, a);
    if (r >= r0 && r <= r1) {
      const double t = (r - r0) / (r1 - r0);
      return (1 - t) * f.value(i, a) + t * f.value(i + 1, a);
    }
  }
  return r < g.radius(0, a) ? 1.0 : f.value(g.radial_count() - 1, a);
}

}  // namespace

TEST(Grid, BallNodeCountAndVolume) {
  const StarDomain<3> ball(DomainSpec::ball(1.0));
  const AnnularGrid<3> g(ball, 8.0, 64, {32, 64});
  // 2048 quadrature directions plus the two poles on every radial shell.
  EXPECT_EQ(g.node_count(), 64 * 2050);
  EXPECT_EQ(g.angular_count(), 2050);
  const double exact = 4 * std::numbers::pi / 3 * (512 - 1);
  EXPECT_NEAR(g.total_volume(), exact, 5e-3 * exact);
  for (int i = 0; i + 1 < g.radial_count(); ++i) EXPECT_LT(g.radius(i, 7), g.radius(i + 1, 7));
  EXPECT_DOUBLE_EQ(g.radius(g.radial_count() - 1, 7), 8.0);
}

TEST(Grid, WulffInnerNodesOnBoundary) {
  const auto f = norm3(NormSpec::power(3, 4.0));
  const StarDomain<3> w(DomainSpec::wulff(1.0), f);
  const AnnularGrid<3> g(w, 8.0, 8, {16, 32});
  for (int a = 0; a < g.angular_count(); ++a)
    EXPECT_NEAR(f->dual_value(g.position(g.node(0, a))), 1.0, 1e-8);
}

TEST(Grid, OuterWeightsIntegrateTheSphere) {
  const StarDomain<3> ball(DomainSpec::ball(1.0));
  const AnnularGrid<3> g(ball, 8.0, 8, {32, 64});
  double s = 0.0, zz = 0.0;
  for (int a = 0; a < g.angular_count(); ++a) {
    s += g.outer_weight(a);
    zz += g.outer_weight(a) * g.direction(a)(2) * g.direction(a)(2);
  }
  EXPECT_NEAR(s, 4 * std::numbers::pi, 5e-3 * 4 * std::numbers::pi);
  EXPECT_NEAR(zz, 4 * std::numbers::pi / 3, 1e-2 * 4 * std::numbers::pi / 3);
  EXPECT_GT(g.outer_weight(g.angular_count() - 1), 0.0);
}

TEST(Grid, RejectsSmallOuterRadius) {
  const StarDomain<3> ball(DomainSpec::ball(1.0));
  EXPECT_THROW(AnnularGrid<3>(ball, 1.5, 16, {8, 16}), std::invalid_argument);
}

TEST(Grid, ElementGradientsReproduceLinearFunctions) {
  const StarDomain<3> d(DomainSpec::ellipsoid({1, 1.5, 2}));
  const AnnularGrid<3> g(d, 6.0, 6, {8, 16});
  const V3 c(0.3, -1.2, 0.7);
  for (const auto& e : g.elements()) {
    Eigen::Vector4d loc;
    for (int k = 0; k < 4; ++k) loc(k) = c.dot(g.position(e.v[k]));
    EXPECT_LT((e.grad_op * loc - c).norm(), 1e-9);
  }
}

TEST(Solver, AnalyticPotentialExamples) {
  const auto euc = norm3(NormSpec::euclidean(3));
  const V3 x(0.3, 2.0, -1.0);
  EXPECT_NEAR(analytic_wulff_potential(*euc, 2.0, 1.0, x), 1.0 / x.norm(), 1e-15);
  for (const auto& spec : {NormSpec::ellipsoid(diag3(1, 4, 9)), NormSpec::power(3, 4.0)}) {
    const auto f = norm3(spec);
    const V3 y = 2.0 * V3(0.2, -0.5, 0.9) / f->dual_value(V3(0.2, -0.5, 0.9));
    EXPECT_NEAR(analytic_wulff_potential(*f, 1.5, 1.0, y), 0.125, 1e-12);
    EXPECT_NEAR(analytic_wulff_potential(*f, 1.5, 1.7, V3(1.7 * y)), analytic_wulff_potential(*f, 1.5, 1.0, y),
                1e-12);
  }
  EXPECT_THROW(analytic_wulff_potential(*euc, 2.0, 1.0, V3(0.1, 0, 0)), std::invalid_argument);
}

TEST(Solver, BallEuclideanMatchesRadialSolution) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> ball(DomainSpec::ball(1.0));
  const auto field = solve_potential(ball, *f, 2.0, small(32, 16));
  ASSERT_TRUE(field.usable()) << field.report.message;
  double err = 0.0;
  const auto& g = *field.grid;
  for (int n = 0; n < g.node_count(); ++n)
    err = std::max(err, std::abs(field.u[n] - 1.0 / g.position(n).norm()));
  EXPECT_LT(err, 0.01);
  EXPECT_TRUE(field.report.monotone_rays);
  EXPECT_NEAR(field.report.energy, 4 * std::numbers::pi, 0.01 * 4 * std::numbers::pi);
}

TEST(Solver, PowerNormWulffMatchesAnalyticPotential) {
  const auto f = norm3(NormSpec::power(3, 4.0));
  const StarDomain<3> w(DomainSpec::wulff(1.0), f);
  const auto field = solve_potential(w, *f, 1.5, small(24, 12));
  ASSERT_TRUE(field.usable()) << field.report.message;
  double err = 0.0;
  const auto& g = *field.grid;
  for (int n = 0; n < g.node_count(); ++n)
    err = std::max(err, std::abs(field.u[n] - analytic_wulff_potential(*f, 1.5, 1.0, g.position(n))));
  EXPECT_LT(err, 0.02);
}

TEST(Solver, RejectsInvalidExponent) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> ball(DomainSpec::ball(1.0));
  EXPECT_THROW(solve_potential(ball, *f, 3.0, small()), std::invalid_argument);
  EXPECT_THROW(solve_potential(ball, *f, 1.0, small()), std::invalid_argument);
  SolverConfig bad = small();
  bad.delta0 = 0.0;
  EXPECT_THROW(solve_potential(ball, *f, 2.0, bad), std::invalid_argument);
}

TEST(Solver, EnergyDecreasesAlongAcceptedSteps) {
  const StarDomain<3> d(DomainSpec::ellipsoid({1, 1, 2}));
  for (Minimizer m : {Minimizer::Newton, Minimizer::NLCG}) {
    // NLCG is slow on the sharply curved polytope norm; keep its case small.
    const auto f = norm3(m == Minimizer::Newton ? NormSpec::cube(3, 4, 0.05) : NormSpec::ellipsoid(diag3(1, 2, 3)));
    SolverConfig c = m == Minimizer::Newton ? small() : small(10, 6);
    c.method = m;
    const auto field = solve_potential(d, *f, 1.6, c);
    EXPECT_TRUE(field.usable()) << to_string(m) << " " << field.report.residual << " " << field.report.robin_residual << " " << field.report.iterations;
    for (const auto& st : field.report.stages)
      for (std::size_t k = 1; k < st.history.size(); ++k) EXPECT_LE(st.history[k], st.history[k - 1]);
  }
}

TEST(Solver, NewtonAndNlcgAgree) {
  const auto f = norm3(NormSpec::ellipsoid(diag3(1, 4, 9)));
  const StarDomain<3> d(DomainSpec::perturbed_wulff(1.0, 0.1, "l2m0"), f);
  SolverConfig c = small();
  const auto a = solve_potential(d, *f, 2.3, c);
  c.method = Minimizer::NLCG;
  const auto b = solve_potential(d, *f, 2.3, c);
  EXPECT_NEAR(a.report.energy, b.report.energy, 1e-7 * a.report.energy);
  EXPECT_LT((a.u - b.u).lpNorm<Eigen::Infinity>(), 1e-4);
}

TEST(Solver, ResidualOfAnalyticFieldDecreasesUnderRefinement) {
  const auto f = norm3(NormSpec::ellipsoid(diag3(1, 4, 9)));
  const StarDomain<3> w(DomainSpec::wulff(1.0), f);
  std::vector<double> res;
  for (int m : {8, 16, 32}) {
    auto grid = std::make_shared<const AnnularGrid<3>>(w, 24.0, 2 * m, SphereResolution{m, 2 * m});
    PotentialField<3> field;
    field.grid = grid;
    field.p = 1.7;
    field.u.resize(grid->node_count());
    for (int n = 0; n < grid->node_count(); ++n)
      field.u[n] = std::min(1.0, analytic_wulff_potential(*f, 1.7, 1.0 - 1e-12, grid->position(n)));
    res.push_back(pde_residual(field, *f));
  }
  EXPECT_GE(std::log2(res[0] / res[1]), 1.0);
  EXPECT_GE(std::log2(res[1] / res[2]), 1.0);
}

TEST(Solver, ConvergedResidualAndConstantField) {
  const auto f = norm3(NormSpec::euclidean(3));
  const StarDomain<3> ball(DomainSpec::ball(1.0));
  SolverConfig c = small();
  const auto field = solve_potential(ball, *f, 2.5, c);
  ASSERT_TRUE(field.report.converged);
  EXPECT_LT(pde_residual(field, *f), 10 * c.gradient_tolerance);

  PotentialField<3> ones = field;
  ones.u.setOnes();
  EXPECT_EQ(pde_residual(ones, *f), 0.0);
  EnergyModel<3> model(*ones.grid, *f, 2.5);
  finalize_field(ones, model);
  // Dirichlet data continued as a constant cannot satisfy the decay condition.
  EXPECT_GT(ones.report.robin_residual, 0.5);
}

TEST(Solver, RobinClosureExactForWulffPotential) {
  // Outward conormal flux of the analytic potential through |x| = R equals the
  // boundary-energy derivative, node by node, for any choice of solid-angle weights.
  for (const auto& spec : {NormSpec::ellipsoid(diag3(1, 4, 9)), NormSpec::power(3, 4.0)}) {
    const auto f = norm3(spec);
    const StarDomain<3> w(DomainSpec::wulff(1.0), f);
    const AnnularGrid<3> g(w, 8.0, 8, {8, 16});
    const double p = 1.8, alpha = (3 - p) / (p - 1);
    EnergyModel<3> model(g, *f, p);
    for (int a = 0; a < g.angular_count(); ++a) {
      const V3 x = g.r_out() * g.direction(a);
      const double u = analytic_wulff_potential(*f, p, 1.0, x);
      const Jet<3> d = f->dual_jet(x);
      const V3 grad = -alpha * u * d.grad / d.value;
      const double flux = std::pow(f->value(grad), p - 1) * f->gradient(grad).dot(g.direction(a)) *
                          std::pow(g.r_out(), 2) * g.outer_weight(a);
      EXPECT_NEAR(flux + model.boundary_coefficient(a) * std::pow(u, p - 1), 0.0,
                  1e-10 * std::abs(flux));
    }
  }
}

TEST(Solver, ComparisonPrinciple) {
  const auto f = norm3(NormSpec::power(3, 4.0));
  SolverConfig c = small();
  c.r_out = 8.0;
  const auto big = solve_potential(StarDomain<3>(DomainSpec::wulff(1.2), f), *f, 1.8, c);
  const auto little = solve_potential(StarDomain<3>(DomainSpec::wulff(1.0), f), *f, 1.8, c);
  const auto& g = *little.grid;
  for (int a = 0; a < g.angular_count(); ++a)
    for (int i = 0; i < g.radial_count(); ++i)
      EXPECT_GE(along_ray(big, a, g.radius(i, a)), little.value(i, a) - 1e-9);
}

TEST(Solver, CapacityScalingLaw) {
  const auto f = norm3(NormSpec::ellipsoid(diag3(1, 4, 9)));
  const double p = 1.7;
  std::vector<double> caps;
  for (double r : {0.5, 1.0, 2.0})
    caps.push_back(solve_potential(StarDomain<3>(DomainSpec::wulff(r), f), *f, p, small()).report.energy);
  EXPECT_NEAR(caps[0] / caps[1], std::pow(0.5, 3 - p), 0.01 * std::pow(0.5, 3 - p));
  EXPECT_NEAR(caps[2] / caps[1], std::pow(2.0, 3 - p), 0.01 * std::pow(2.0, 3 - p));
}

TEST(Solver, ThreadCountDoesNotChangeResult) {
  const auto f = norm3(NormSpec::cube(3, 4, 0.05));
  const StarDomain<3> d(DomainSpec::ellipsoid({1, 1, 1.5}));
  SolverConfig c = small();
  const auto a = solve_potential(d, *f, 2.2, c);
  c.threads = 3;
  const auto b = solve_potential(d, *f, 2.2, c);
  EXPECT_EQ(a.report.energy, b.report.energy);
  EXPECT_TRUE(a.u == b.u);
}

TEST(Solver, FieldDumpLayout) {
  const auto f = norm3(NormSpec::euclidean(3));
  const auto field = solve_potential(StarDomain<3>(DomainSpec::ball(1.0)), *f, 2.0, small(6, 4));
  const std::string path = ::testing::TempDir() + "field.bin";
  write_field(field, path);
  std::ifstream in(path, std::ios::binary);
  char magic[8];
  in.read(magic, 8);
  EXPECT_EQ(std::string(magic, 8), "ANICAPF1");
  std::uint32_t dims[5];
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  EXPECT_EQ(dims[0], 3u);
  EXPECT_EQ(dims[1], 6u);
  EXPECT_EQ(dims[2], 4u);
  EXPECT_EQ(dims[3], 8u);
  EXPECT_EQ(dims[4], 2u);
  std::vector<double> u(field.u.size());
  in.read(reinterpret_cast<char*>(u.data()), sizeof(double) * u.size());
  EXPECT_EQ(u[field.grid->node(3, 5)], field.value(3, 5));
  in.seekg(0, std::ios::end);
  EXPECT_EQ(static_cast<std::size_t>(in.tellg()), 8 + sizeof dims + sizeof(double) * u.size() * 4);
  std::remove(path.c_str());
}

TEST(Solver, TwoDimensionalWulffCapacity) {
  const auto f = std::make_shared<const NormEvaluator<2>>(NormSpec::power(2, 3.0));
  const StarDomain<2> w(DomainSpec::wulff(1.0), f);
  SolverConfig c;
  c.radial = 64;
  c.angular = {4, 128};
  const double p = 1.5;
  const auto field = solve_potential(w, *f, p, c);
  ASSERT_TRUE(field.usable());
  const double exact = wulff_capacity(2, kappa(*f, {4, 512}), p);
  EXPECT_NEAR(field.report.energy, exact, 0.01 * exact);
}
