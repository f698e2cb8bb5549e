#pragma once

// Exterior capacitary problem on an annular grid: minimise
//   E(u) = sum_e |e| (F(grad u)^2 + delta^2)^{p/2} + B(u),
//   B(u) = alpha^{p-1} R_out^{n-p} sum_a w_a |u_a|^p F°(theta_a)^{-p},
// w_a the lumped solid-angle weights of the polyhedral outer surface,
// with u = 1 on dOmega and alpha = (n-p)/(p-1). B is the energy of the
// Wulff-radial extension of the outer trace, so its natural boundary condition
// is the decay-matched Robin relation, and E itself estimates the capacity.

#include <Eigen/CholmodSupport>
#include <Eigen/Sparse>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "anicap/grid.hpp"
#include "anicap/norms.hpp"
#include "anicap/parallel.hpp"

namespace anicap {

enum class Minimizer { Newton, NLCG };

inline std::string to_string(Minimizer m) { return m == Minimizer::Newton ? "newton" : "nlcg"; }

struct SolverConfig {
  int radial = 64;
  SphereResolution angular{32, 64};
  double r_out = 0.0;          // absolute outer radius; 0 means r_out_factor * max rho
  double r_out_factor = 8.0;   // 0 means the small-p rule (see outer_radius)
  double delta0 = 1e-2;        // relative to 1/max rho
  double delta_factor = 0.1;
  double delta_final = 1e-6;
  double energy_tolerance = 1e-14;    // relative energy change / Newton decrement
  double gradient_tolerance = 1e-6;   // optimality target; a solve converges below 10x this
  int max_iterations = 200;           // per continuation stage (NLCG: x 100)
  int refactor_threshold = 25;        // PCG iterations that trigger a new factorisation
  Minimizer method = Minimizer::Newton;
  int threads = 1;

  void validate() const {
    require(delta0 > 0.0 && delta_final > 0.0 && delta_final <= delta0, "need 0 < delta_final <= delta0");
    require(delta_factor > 0.0 && delta_factor < 1.0, "delta_factor must lie in (0,1)");
    require(energy_tolerance > 0.0 && gradient_tolerance > 0.0, "tolerances must be positive");
    require(max_iterations > 0, "max_iterations must be positive");
    require(r_out >= 0.0 && r_out_factor >= 0.0, "outer radius settings must be non-negative");
    require(threads >= 1, "threads must be at least 1");
  }
};

/// Outer radius: explicit R_out, else factor * max rho. A zero factor selects
/// clamp(exp(8/alpha), 2.05, 8), which keeps the far-field value of the
/// potential representable when the decay exponent alpha is large (p -> 1).
inline double outer_radius(const SolverConfig& c, double max_rho, int n, double p) {
  if (c.r_out > 0.0) return c.r_out;
  double factor = c.r_out_factor;
  if (factor == 0.0) {
    const double alpha = (n - p) / (p - 1.0);
    factor = std::clamp(std::exp(8.0 / alpha), 2.05, 8.0);
  }
  return factor * max_rho;
}

struct DeltaStage {
  double delta = 0.0;
  double energy = 0.0;
  int iterations = 0;
  double decrement = 0.0;
  std::vector<double> history;  // energy after each accepted step
};

struct SolveReport {
  std::string method;
  double energy = 0.0;         // at delta = 0
  double residual = 0.0;       // relative weak-form residual at delta = 0
  double robin_residual = 0.0;
  int iterations = 0;
  int linear_iterations = 0;
  int factorizations = 0;
  std::vector<DeltaStage> stages;
  bool converged = false;
  bool max_principle = false;
  bool monotone_rays = false;
  double min_u = 0.0;
  double max_u = 0.0;
  double r_out = 0.0;
  double seconds = 0.0;
  std::string message;
};

template <int N>
struct PotentialField {
  std::shared_ptr<const AnnularGrid<N>> grid;
  Eigen::VectorXd u;  // nodal values, ring-major
  NormSpec norm;
  double p = 2.0;
  double gamma = 0.0;  // energy^{1/(p-1)}
  SolveReport report;

  double value(int i, int a) const { return u[grid->node(i, a)]; }
  bool usable() const { return report.converged && report.max_principle; }
};

/// Discrete energy with derivatives. Unknowns are the nodal values off the
/// inner ring; full nodal vectors are used throughout.
template <int N>
class EnergyModel {
 public:
  using Sparse = Eigen::SparseMatrix<double>;

  EnergyModel(const AnnularGrid<N>& grid, const NormEvaluator<N>& norm, double p, int threads = 1)
      : grid_(grid), norm_(norm), p_(p), threads_(threads) {
    require(p > 1.0 && p < N, "solver requires 1 < p < n");
    alpha_ = (N - p) / (p - 1.0);
    const int na = grid.angular_count();
    const int outer = grid.radial_count() - 1;
    boundary_.assign(na, 0.0);
    const double scale = std::pow(alpha_, p - 1.0) * std::pow(grid.r_out(), N - p);
    for (int a = 0; a < na; ++a)
      boundary_[a] = scale * grid.outer_weight(a) * std::pow(norm.dual_value(grid.direction(a)), -p);
    outer_offset_ = grid.node(outer, 0);
    local_.resize(grid.elements().size() * (N + 1));
  }

  double p() const { return p_; }
  double alpha() const { return alpha_; }
  const AnnularGrid<N>& grid() const { return grid_; }
  int free_offset() const { return grid_.angular_count(); }
  int free_count() const { return grid_.node_count() - grid_.angular_count(); }
  void set_delta(double d) { delta_ = d; }
  double delta() const { return delta_; }
  double boundary_coefficient(int a) const { return boundary_[a]; }

  Vec<N> element_gradient(std::size_t e, const Eigen::VectorXd& u) const {
    const auto& el = grid_.elements()[e];
    // Differences against vertex 0: constants map to an exact zero gradient.
    const double u0 = u[el.v[0]];
    Vec<N> g = Vec<N>::Zero();
    for (int k = 1; k <= N; ++k) g += (u[el.v[k]] - u0) * el.grad_op.col(k);
    return g;
  }

  double energy(const Eigen::VectorXd& u) const {
    const double d2 = delta_ * delta_;
    double e = parallel_sum(threads_, grid_.elements().size(), [&](std::size_t k) {
      const Vec<N> xi = element_gradient(k, u);
      const double f = xi.squaredNorm() > 0.0 ? norm_.value(xi) : 0.0;
      return grid_.elements()[k].volume * std::pow(f * f + d2, 0.5 * p_);
    });
    return e + boundary_energy(u);
  }

  double boundary_energy(const Eigen::VectorXd& u) const {
    double b = 0.0;
    for (int a = 0; a < grid_.angular_count(); ++a)
      b += boundary_[a] * std::pow(std::abs(u[outer_offset_ + a]), p_);
    return b;
  }

  /// Energy and its gradient; the gradient is zero on the Dirichlet ring.
  double energy_gradient(const Eigen::VectorXd& u, Eigen::VectorXd& grad) const {
    const double d2 = delta_ * delta_;
    const auto& els = grid_.elements();
    std::vector<double> partial(kChunks, 0.0);
    parallel_chunks(threads_, els.size(), [&](int c, std::size_t b, std::size_t end) {
      double s = 0.0;
      for (std::size_t k = b; k < end; ++k) {
        const Vec<N> xi = element_gradient(k, u);
        double f = 0.0;
        Vec<N> fx = Vec<N>::Zero();
        if (xi.squaredNorm() > 0.0) norm_.value_gradient(xi, f, fx);
        const double t = f * f + d2;
        const double vol = els[k].volume;
        s += vol * std::pow(t, 0.5 * p_);
        const Vec<N> flux = vol * p_ * std::pow(t, 0.5 * p_ - 1.0) * f * fx;
        const auto g = els[k].grad_op.transpose() * flux;
        for (int j = 0; j <= N; ++j) local_[k * (N + 1) + j] = g(j);
      }
      partial[c] = s;
    });
    double e = 0.0;
    for (double v : partial) e += v;
    gather(grad);
    for (int a = 0; a < grid_.angular_count(); ++a) {
      const double v = u[outer_offset_ + a];
      grad[outer_offset_ + a] += boundary_[a] * p_ * std::pow(std::abs(v), p_ - 1.0) * (v < 0 ? -1.0 : 1.0);
    }
    return e + boundary_energy(u);
  }

  /// Weak-form residual at delta = 0 (divided by p) and the matching sum of
  /// absolute contributions, per node.
  void weak_residual(const Eigen::VectorXd& u, Eigen::VectorXd& res, Eigen::VectorXd& scale) const {
    const auto& els = grid_.elements();
    std::vector<double> abs_local(local_.size());
    parallel_for(threads_, els.size(), [&](std::size_t k) {
      const Vec<N> xi = element_gradient(k, u);
      double f = 0.0;
      Vec<N> fx = Vec<N>::Zero();
      if (xi.squaredNorm() > 0.0) norm_.value_gradient(xi, f, fx);
      const Vec<N> flux = els[k].volume * std::pow(f, p_ - 1.0) * fx;
      const auto g = els[k].grad_op.transpose() * flux;
      for (int j = 0; j <= N; ++j) {
        local_[k * (N + 1) + j] = g(j);
        abs_local[k * (N + 1) + j] = std::abs(g(j));
      }
    });
    gather(res);
    gather_from(abs_local, scale);
    for (int a = 0; a < grid_.angular_count(); ++a) {
      const double b = boundary_[a] * std::pow(std::abs(u[outer_offset_ + a]), p_ - 1.0);
      res[outer_offset_ + a] += b;
      scale[outer_offset_ + a] += std::abs(b);
    }
  }

  /// Sparse Hessian on the free nodes (full symmetric storage).
  const Sparse& hessian(const Eigen::VectorXd& u) const {
    if (!pattern_ready_) build_pattern();
    const auto& els = grid_.elements();
    const double d2 = delta_ * delta_;
    constexpr int M = (N + 1) * (N + 1);
    parallel_for(threads_, els.size(), [&](std::size_t k) {
      const Vec<N> xi = element_gradient(k, u);
      Mat<N> h;
      if (xi.squaredNorm() > 0.0) {
        const Jet<N> j = norm_.jet(xi);
        const double f = j.value;
        const double t = f * f + d2;
        const Mat<N> a = f * j.hess + j.grad * j.grad.transpose();
        h = p_ * std::pow(t, 0.5 * p_ - 1.0) * a +
            p_ * (p_ - 2.0) * std::pow(t, 0.5 * p_ - 2.0) * f * f * j.grad * j.grad.transpose();
      } else {
        h = p_ * std::pow(d2, 0.5 * p_ - 1.0) * Mat<N>::Identity();
      }
      const auto& g = els[k].grad_op;
      const Eigen::Matrix<double, N + 1, N + 1> ke = els[k].volume * g.transpose() * h * g;
      for (int r = 0; r <= N; ++r)
        for (int c = 0; c <= N; ++c) elem_hess_[k * M + r * (N + 1) + c] = ke(r, c);
    });
    double* vals = hess_.valuePtr();
    std::fill(vals, vals + hess_.nonZeros(), 0.0);
    for (std::size_t k = 0; k < els.size(); ++k)
      for (int m = 0; m < M; ++m)
        if (positions_[k * M + m] >= 0) vals[positions_[k * M + m]] += elem_hess_[k * M + m];
    const int off = free_offset();
    for (int a = 0; a < grid_.angular_count(); ++a) {
      if (boundary_[a] == 0.0) continue;
      const double v = std::max(std::abs(u[outer_offset_ + a]), 1e-300);
      hess_.coeffRef(outer_offset_ + a - off, outer_offset_ + a - off) +=
          boundary_[a] * p_ * (p_ - 1.0) * std::pow(v, p_ - 2.0);
    }
    return hess_;
  }

  /// Diagonal of the p = 2 Euclidean surrogate on the free nodes.
  Eigen::VectorXd surrogate_diagonal() const {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(grid_.node_count());
    for (const auto& el : grid_.elements())
      for (int k = 0; k <= N; ++k) d[el.v[k]] += el.volume * el.grad_op.col(k).squaredNorm();
    for (int a = 0; a < grid_.angular_count(); ++a) d[outer_offset_ + a] += boundary_[a];
    return d.tail(free_count());
  }

 private:
  void gather(Eigen::VectorXd& out) const { gather_from(local_, out); }

  void gather_from(const std::vector<double>& local, Eigen::VectorXd& out) const {
    const int nn = grid_.node_count();
    out.setZero(nn);
    const int off = grid_.angular_count();
    parallel_for(threads_, static_cast<std::size_t>(nn - off), [&](std::size_t m) {
      const int n = static_cast<int>(m) + off;
      const auto [b, e] = grid_.incident(n);
      const int* loc = grid_.incident_local(n);
      double s = 0.0;
      for (const int* it = b; it != e; ++it, ++loc) s += local[*it * (N + 1) + *loc];
      out[n] = s;
    });
  }

  void build_pattern() const {
    const auto& els = grid_.elements();
    const int off = free_offset();
    constexpr int M = (N + 1) * (N + 1);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(els.size() * M);
    for (const auto& el : els)
      for (int r = 0; r <= N; ++r)
        for (int c = 0; c <= N; ++c)
          if (el.v[r] >= off && el.v[c] >= off) trip.emplace_back(el.v[r] - off, el.v[c] - off, 0.0);
    hess_.resize(free_count(), free_count());
    hess_.setFromTriplets(trip.begin(), trip.end());
    hess_.makeCompressed();
    positions_.assign(els.size() * M, -1);
    const int* outer = hess_.outerIndexPtr();
    const int* inner = hess_.innerIndexPtr();
    for (std::size_t k = 0; k < els.size(); ++k) {
      for (int r = 0; r <= N; ++r) {
        for (int c = 0; c <= N; ++c) {
          const int i = els[k].v[r] - off, j = els[k].v[c] - off;
          if (i < 0 || j < 0) continue;
          const int* pos = std::lower_bound(inner + outer[j], inner + outer[j + 1], i);
          positions_[k * M + r * (N + 1) + c] = static_cast<int>(pos - inner);
        }
      }
    }
    elem_hess_.resize(els.size() * M);
    pattern_ready_ = true;
  }

  const AnnularGrid<N>& grid_;
  const NormEvaluator<N>& norm_;
  double p_;
  int threads_;
  double alpha_ = 0.0;
  double delta_ = 0.0;
  int outer_offset_ = 0;
  std::vector<double> boundary_;
  mutable std::vector<double> local_;
  mutable bool pattern_ready_ = false;
  mutable Sparse hess_;
  mutable std::vector<int> positions_;
  mutable std::vector<double> elem_hess_;
};

/// u = (r / rho(theta))^{-alpha} along every ray.
template <int N>
Eigen::VectorXd initial_guess(const AnnularGrid<N>& grid, double p) {
  const double alpha = (N - p) / (p - 1.0);
  Eigen::VectorXd u(grid.node_count());
  for (int i = 0; i < grid.radial_count(); ++i)
    for (int a = 0; a < grid.angular_count(); ++a)
      u[grid.node(i, a)] = i == 0 ? 1.0 : std::pow(grid.radius(i, a) / grid.rho(a), -alpha);
  return u;
}

/// Relative weak-form residual at delta = 0: interior nodes and outer (Robin) ring.
template <int N>
std::pair<double, double> weak_residuals(const EnergyModel<N>& model, const AnnularGrid<N>& grid,
                                         const Eigen::VectorXd& u) {
  Eigen::VectorXd res, scale;
  model.weak_residual(u, res, scale);
  const int na = grid.angular_count();
  const int outer = grid.node(grid.radial_count() - 1, 0);
  const int interior = outer - na;
  double rn = res.segment(na, interior).norm(), sn = scale.segment(na, interior).norm();
  double ro = res.segment(outer, na).norm(), so = scale.segment(outer, na).norm();
  return {sn > 0 ? rn / sn : 0.0, so > 0 ? ro / so : 0.0};
}

namespace detail {

struct LinearSolveStats {
  int iterations = 0;
  bool ok = true;
};

/// Preconditioned CG for H d = b with a Cholesky factor of a nearby matrix.
template <class Factor>
LinearSolveStats pcg(const Eigen::SparseMatrix<double>& h, const Factor& pre, const Eigen::VectorXd& b,
                     Eigen::VectorXd& x, double rtol, int max_it) {
  LinearSolveStats st;
  x = pre.solve(b);
  Eigen::VectorXd r = b - h * x;
  const double bn = b.norm();
  if (r.norm() <= rtol * bn) return st;
  Eigen::VectorXd z = pre.solve(r);
  Eigen::VectorXd d = z;
  double rz = r.dot(z);
  for (st.iterations = 1; st.iterations <= max_it; ++st.iterations) {
    const Eigen::VectorXd hd = h * d;
    const double dhd = d.dot(hd);
    if (!(dhd > 0.0)) {
      st.ok = false;
      return st;
    }
    const double step = rz / dhd;
    x += step * d;
    r -= step * hd;
    if (r.norm() <= rtol * bn) return st;
    z = pre.solve(r);
    const double rz_new = r.dot(z);
    d = z + (rz_new / rz) * d;
    rz = rz_new;
  }
  st.ok = false;
  return st;
}

template <int N>
bool armijo(const EnergyModel<N>& model, Eigen::VectorXd& u, const Eigen::VectorXd& dir_free, double e0,
            double slope, double& e_new, double t0 = 1.0, double* accepted = nullptr) {
  Eigen::VectorXd trial = u;
  double t = t0;
  for (int k = 0; k < 60; ++k, t *= 0.5) {
    trial.tail(model.free_count()) = u.tail(model.free_count()) + t * dir_free;
    const double e = model.energy(trial);
    if (std::isfinite(e) && e <= e0 + 1e-4 * t * slope) {
      u = trial;
      e_new = e;
      if (accepted) *accepted = t;
      return true;
    }
  }
  return false;
}

}  // namespace detail

/// Newton iteration with Armijo backtracking for one continuation stage. The
/// Newton systems are solved by PCG preconditioned with a Cholesky factor of a
/// recent Hessian, refreshed when PCG needs too many iterations.
template <int N>
class NewtonMinimizer {
 public:
  using Factor = Eigen::CholmodSupernodalLLT<Eigen::SparseMatrix<double>, Eigen::Lower>;

  explicit NewtonMinimizer(const SolverConfig& cfg) : cfg_(cfg) {}

  /// With `polish`, once the energy stops resolving progress (far-field
  /// contributions below its rounding level) steps are accepted on decrease of
  /// the weak residual instead.
  DeltaStage run(const EnergyModel<N>& model, Eigen::VectorXd& u, SolveReport& rep, bool polish = false) {
    DeltaStage st;
    bool polishing = false;
    st.delta = model.delta();
    Eigen::VectorXd grad;
    double e = model.energy_gradient(u, grad);
    st.history.push_back(e);
    for (int it = 0; it < cfg_.max_iterations; ++it) {
      const Eigen::VectorXd g = grad.tail(model.free_count());
      const auto& h = model.hessian(u);
      if (!factor_ || last_pcg_ > cfg_.refactor_threshold) refactor(h, rep);
      Eigen::VectorXd d;
      const double gn = g.norm();
      const double rtol = std::clamp(std::sqrt(gn / std::max(g0_, 1e-300)), 1e-10, 1e-2);
      if (g0_ == 0.0) g0_ = gn;
      auto ls = detail::pcg(h, *factor_, Eigen::VectorXd(-g), d, rtol, 200);
      rep.linear_iterations += ls.iterations;
      last_pcg_ = ls.iterations;
      if (!ls.ok) {
        refactor(h, rep);
        ls = detail::pcg(h, *factor_, Eigen::VectorXd(-g), d, rtol, 200);
        rep.linear_iterations += ls.iterations;
        last_pcg_ = ls.iterations;
      }
      const double slope = g.dot(d);
      st.decrement = -slope;
      ++st.iterations;
      ++rep.iterations;
      if (!(slope < 0.0)) break;
      bool stalled = -slope <= cfg_.energy_tolerance * std::abs(e);
      double e_new = e;
      if (!stalled && !polishing) {
        const bool moved = detail::armijo(model, u, d, e, slope, e_new);
        stalled = !moved || e - e_new <= 1e-3 * cfg_.energy_tolerance * std::abs(e_new);
        if (moved) {
          e = model.energy_gradient(u, grad);
          st.history.push_back(e);
        }
        if (!stalled) continue;
        if (!polish) break;
        polishing = true;
        if (moved) continue;  // fresh direction at the new iterate
      }
      if (!polish || !residual_step(model, u, d)) break;
      polishing = true;
      e = model.energy_gradient(u, grad);
      st.history.push_back(e);
    }
    st.energy = e;
    return st;
  }

 private:
  static double worst_residual(const EnergyModel<N>& model, const Eigen::VectorXd& u) {
    const auto [r_in, r_out] = weak_residuals(model, model.grid(), u);
    return std::max(r_in, r_out);
  }

  // Backtracking on the weak residual; false once it is below tolerance or stuck.
  bool residual_step(const EnergyModel<N>& model, Eigen::VectorXd& u, const Eigen::VectorXd& d) const {
    const double r0 = worst_residual(model, u);
    if (r0 <= cfg_.gradient_tolerance) return false;
    Eigen::VectorXd trial = u;
    for (double t = 1.0; t > 1e-3; t *= 0.5) {
      trial.tail(model.free_count()) = u.tail(model.free_count()) + t * d;
      if (worst_residual(model, trial) < r0) {
        u = trial;
        return true;
      }
    }
    return false;
  }

  void refactor(const Eigen::SparseMatrix<double>& h, SolveReport& rep) {
    if (!factor_) {
      factor_.emplace();
      factor_->cholmod().nmethods = 1;
      factor_->cholmod().method[0].ordering = CHOLMOD_METIS;
      factor_->analyzePattern(h);
    }
    factor_->factorize(h);
    require(factor_->info() == Eigen::Success, "Hessian factorisation failed");
    ++rep.factorizations;
    last_pcg_ = 0;
  }

  SolverConfig cfg_;
  std::optional<Factor> factor_;
  int last_pcg_ = 0;
  double g0_ = 0.0;
};

/// Polak-Ribiere+ nonlinear CG with the p = 2 Euclidean diagonal preconditioner.
template <int N>
DeltaStage nlcg_stage(const EnergyModel<N>& model, Eigen::VectorXd& u, const SolverConfig& cfg,
                      SolveReport& rep) {
  DeltaStage st;
  st.delta = model.delta();
  const Eigen::VectorXd pinv = model.surrogate_diagonal().cwiseInverse();
  Eigen::VectorXd grad;
  double e = model.energy_gradient(u, grad);
  st.history.push_back(e);
  Eigen::VectorXd g = grad.tail(model.free_count());
  Eigen::VectorXd z = pinv.cwiseProduct(g);
  Eigen::VectorXd d = -z;
  double gz = g.dot(z);
  double step = 1.0;
  const int max_it = cfg.max_iterations * 100;
  // Stop on the relative weak-form residual (the gradient carries a factor p).
  Eigen::VectorXd res, scale;
  model.weak_residual(u, res, scale);
  const double target = 0.5 * cfg.gradient_tolerance * model.p() * scale.norm();
  for (int it = 0; it < max_it; ++it) {
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      d = -z;
      slope = -gz;
    }
    double e_new = e;
    if (!detail::armijo(model, u, d, e, slope, e_new, std::min(1.0, 2.0 * step), &step)) break;
    ++st.iterations;
    ++rep.iterations;
    const double de = e - e_new;
    e = model.energy_gradient(u, grad);
    st.history.push_back(e);
    const Eigen::VectorXd g_new = grad.tail(model.free_count());
    const Eigen::VectorXd z_new = pinv.cwiseProduct(g_new);
    const double gz_new = g_new.dot(z_new);
    const double beta = std::max(0.0, (gz_new - g.dot(z_new)) / gz);
    d = -z_new + beta * d;
    g = g_new;
    z = z_new;
    gz = gz_new;
    st.decrement = de;
    if (g.norm() <= target) break;
  }
  st.energy = e;
  return st;
}

/// Post-solve bookkeeping shared by the solvers and by externally supplied fields.
template <int N>
void finalize_field(PotentialField<N>& field, const EnergyModel<N>& model, double tol = 1e-9) {
  const auto& g = *field.grid;
  auto& rep = field.report;
  const int na = g.angular_count();
  rep.min_u = field.u.tail(g.node_count() - na).minCoeff();
  rep.max_u = field.u.tail(g.node_count() - na).maxCoeff();
  rep.max_principle = rep.min_u > 0.0 && rep.max_u <= 1.0 + tol;
  rep.monotone_rays = true;
  for (int a = 0; a < na && rep.monotone_rays; ++a)
    for (int i = 0; i + 1 < g.radial_count(); ++i)
      if (field.value(i + 1, a) > field.value(i, a) + tol) {
        rep.monotone_rays = false;
        break;
      }
  auto [r_in, r_out] = weak_residuals(model, g, field.u);
  rep.residual = r_in;
  rep.robin_residual = r_out;
  rep.r_out = g.r_out();
}

template <int N>
PotentialField<N> solve_potential(std::shared_ptr<const AnnularGrid<N>> grid, const NormEvaluator<N>& norm,
                                  double p, const SolverConfig& cfg) {
  cfg.validate();
  require(p > 1.0 && p < N, "solver requires 1 < p < n");
  const auto t0 = std::chrono::steady_clock::now();
  PotentialField<N> field;
  field.grid = grid;
  field.norm = norm.spec();
  field.p = p;
  field.u = initial_guess(*grid, p);
  field.report.method = to_string(cfg.method);

  EnergyModel<N> model(*grid, norm, p, cfg.threads);
  double max_rho = 0.0, min_rho = 1e300;
  for (int a = 0; a < grid->angular_count(); ++a) {
    max_rho = std::max(max_rho, grid->rho(a));
    min_rho = std::min(min_rho, grid->rho(a));
  }
  const double scale = 1.0 / max_rho;
  // The last delta must sit well below |grad u| at R_out, else the far field
  // (where F^{p-1} stays O(1) as p -> 1) is governed by the regularisation.
  const double alpha = model.alpha();
  const double far_gradient = alpha / grid->r_out() * std::pow(grid->r_out() / min_rho, -alpha) * max_rho;
  const double delta_final = std::min(cfg.delta_final, 1e-3 * far_gradient);

  NewtonMinimizer<N> newton(cfg);
  std::vector<double> deltas;
  for (double d = cfg.delta0; d > delta_final * (1.0 + 1e-12); d *= cfg.delta_factor) deltas.push_back(d);
  deltas.push_back(delta_final);
  for (double d : deltas) {
    model.set_delta(d * scale);
    DeltaStage st = cfg.method == Minimizer::Newton ? newton.run(model, field.u, field.report, d == deltas.back())
                                                     : nlcg_stage(model, field.u, cfg, field.report);
    st.delta = d;
    field.report.stages.push_back(st);
  }
  model.set_delta(0.0);
  field.report.energy = model.energy(field.u);
  field.gamma = std::pow(field.report.energy, 1.0 / (p - 1.0));
  finalize_field(field, model);
  auto& rep = field.report;
  rep.converged = std::isfinite(rep.energy) && rep.residual <= 10.0 * cfg.gradient_tolerance &&
                  rep.robin_residual <= 10.0 * cfg.gradient_tolerance;
  if (!rep.converged) rep.message = "minimisation did not reach the residual tolerance";
  else if (!rep.max_principle) rep.message = "discrete maximum principle violated";
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return field;
}

/// Convenience overload: builds the grid from the domain and the configuration.
template <int N>
PotentialField<N> solve_potential(const StarDomain<N>& domain, const NormEvaluator<N>& norm, double p,
                                  const SolverConfig& cfg) {
  const double r_out = outer_radius(cfg, domain.max_radius(), N, p);
  auto grid = std::make_shared<const AnnularGrid<N>>(domain, r_out, cfg.radial, cfg.angular);
  return solve_potential<N>(grid, norm, p, cfg);
}

/// pde_residual: relative weak-form residual of a field at interior nodes.
template <int N>
double pde_residual(const PotentialField<N>& field, const NormEvaluator<N>& norm) {
  EnergyModel<N> model(*field.grid, norm, field.p);
  return weak_residuals(model, *field.grid, field.u).first;
}

/// Binary dump: "ANICAPF1", uint32 n, Nr, Nt, Np, poles; then u (Nr x angular,
/// ring-major float64), then node coordinates (float64, n per node).
template <int N>
void write_field(const PotentialField<N>& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), "cannot open " + path);
  const auto& g = *field.grid;
  out.write("ANICAPF1", 8);
  const std::uint32_t dims[5] = {static_cast<std::uint32_t>(N), static_cast<std::uint32_t>(g.radial_count()),
                                 static_cast<std::uint32_t>(g.sphere().rings()),
                                 static_cast<std::uint32_t>(g.sphere().columns()),
                                 static_cast<std::uint32_t>(AnnularGrid<N>::kPoles)};
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  out.write(reinterpret_cast<const char*>(field.u.data()), sizeof(double) * field.u.size());
  for (int n = 0; n < g.node_count(); ++n)
    out.write(reinterpret_cast<const char*>(g.position(n).data()), sizeof(double) * N);
  require(static_cast<bool>(out), "failed writing " + path);
}

}  // namespace anicap
