#pragma once

// Annular grid between dOmega and the sphere |x| = R_out, split into linear
// simplices. Nodes sit on rays through the angular quadrature nodes (plus the
// two poles for n = 3); along each ray r_i = rho (R_out/rho)^{s_i}, s_i = i/(Nr-1).

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "anicap/domains.hpp"
#include "anicap/sphere.hpp"

namespace anicap {

template <int N>
struct Simplex {
  std::array<int, N + 1> v;
  Eigen::Matrix<double, N, N + 1> grad_op;  // maps nodal values to the Cartesian gradient
  double volume = 0.0;
};

template <int N>
class AnnularGrid {
 public:
  static constexpr int kPoles = N == 3 ? 2 : 0;

  AnnularGrid(const StarDomain<N>& domain, double r_out, int radial, SphereResolution res)
      : sphere_(res), r_out_(r_out), nr_(radial) {
    require(radial >= 4, "radial resolution must be at least 4");
    require(r_out > 2.0 * domain.max_radius(), "R_out must exceed twice the maximal domain radius");
    na_ = static_cast<int>(sphere_.size()) + kPoles;
    dirs_.assign(sphere_.dirs.begin(), sphere_.dirs.end());
    weights_.assign(sphere_.weights.begin(), sphere_.weights.end());
    if constexpr (N == 3) {
      dirs_.push_back(Vec<3>(0, 0, 1));
      dirs_.push_back(Vec<3>(0, 0, -1));
      weights_.push_back(0.0);
      weights_.push_back(0.0);
    }
    rho_.resize(na_);
    for (int a = 0; a < na_; ++a) rho_[a] = domain.radius(dirs_[a]);
    s_.resize(nr_);
    for (int i = 0; i < nr_; ++i) s_[i] = static_cast<double>(i) / (nr_ - 1);
    positions_.resize(static_cast<std::size_t>(nr_) * na_);
    for (int i = 0; i < nr_; ++i)
      for (int a = 0; a < na_; ++a) positions_[node(i, a)] = radius(i, a) * dirs_[a];
    build_elements();
    build_incidence();
    build_outer_weights();
  }

  const SphereGrid<N>& sphere() const { return sphere_; }
  double r_out() const { return r_out_; }
  int radial_count() const { return nr_; }
  int angular_count() const { return na_; }
  int node_count() const { return nr_ * na_; }
  int node(int i, int a) const { return i * na_ + a; }
  double s(int i) const { return s_[i]; }
  double rho(int a) const { return rho_[a]; }
  const Vec<N>& direction(int a) const { return dirs_[a]; }
  /// Sphere quadrature weight of angular node a (zero at the poles).
  double sphere_weight(int a) const { return weights_[a]; }
  double radius(int i, int a) const {
    if (i == nr_ - 1) return r_out_;
    return rho_[a] * std::pow(r_out_ / rho_[a], s_[i]);
  }
  /// d r / d s along ray a.
  double log_ratio(int a) const { return std::log(r_out_ / rho_[a]); }
  const Vec<N>& position(int n) const { return positions_[n]; }
  /// Lumped P1 weight of angular node a on the outer surface, normalised to
  /// solid angle: sum over incident outer facets of (distance to plane *
  /// facet measure / n) / R_out^n. These weights sum to n |polytope| / R_out^n.
  double outer_weight(int a) const { return outer_weights_[a]; }
  const std::vector<Simplex<N>>& elements() const { return elements_; }

  /// Elements touching node n, as (element, local vertex) pairs.
  std::pair<const int*, const int*> incident(int n) const {
    return {inc_elem_.data() + inc_start_[n], inc_elem_.data() + inc_start_[n + 1]};
  }
  const int* incident_local(int n) const { return inc_local_.data() + inc_start_[n]; }

  /// Angular triangles (n = 3) or segments (n = 2) of the sphere tiling.
  const std::vector<std::array<int, N>>& facets() const { return facets_; }

  double total_volume() const {
    double v = 0.0;
    for (const auto& e : elements_) v += e.volume;
    return v;
  }

 private:
  void build_facets() {
    if constexpr (N == 3) {
      const int nt = sphere_.rings(), np = sphere_.columns();
      const int north = na_ - 2, south = na_ - 1;
      for (int k = 0; k < np; ++k) {
        const int k1 = (k + 1) % np;
        facets_.push_back({north, sphere_.index(0, k), sphere_.index(0, k1)});
        facets_.push_back({south, sphere_.index(nt - 1, k1), sphere_.index(nt - 1, k)});
        for (int j = 0; j + 1 < nt; ++j) {
          const int a = sphere_.index(j, k), b = sphere_.index(j, k1);
          const int c = sphere_.index(j + 1, k1), d = sphere_.index(j + 1, k);
          facets_.push_back({a, b, c});
          facets_.push_back({a, c, d});
        }
      }
    } else {
      const int np = sphere_.columns();
      for (int k = 0; k < np; ++k) facets_.push_back({k, (k + 1) % np});
    }
  }

  void add_simplex(const std::array<int, N + 1>& v) {
    Simplex<N> e;
    e.v = v;
    Mat<N> edges;
    for (int k = 0; k < N; ++k) edges.col(k) = positions_[v[k + 1]] - positions_[v[0]];
    const double det = edges.determinant();
    double fact = 1.0;
    for (int k = 2; k <= N; ++k) fact *= k;
    e.volume = std::abs(det) / fact;
    require(e.volume > 0.0, "degenerate grid element");
    // grad of barycentric coordinates 1..N are the rows of edges^{-1}.
    const Mat<N> inv = edges.inverse();
    e.grad_op.col(0) = -inv.transpose() * Vec<N>::Ones();
    for (int k = 0; k < N; ++k) e.grad_op.col(k + 1) = inv.row(k).transpose();
    elements_.push_back(e);
  }

  void build_elements() {
    build_facets();
    elements_.reserve(facets_.size() * N * (nr_ - 1));
    for (int i = 0; i + 1 < nr_; ++i) {
      for (auto f : facets_) {
        std::sort(f.begin(), f.end());
        // Prism split keyed on sorted angular indices keeps shared faces conforming.
        if constexpr (N == 3) {
          const int a = node(i, f[0]), b = node(i, f[1]), c = node(i, f[2]);
          const int a1 = node(i + 1, f[0]), b1 = node(i + 1, f[1]), c1 = node(i + 1, f[2]);
          add_simplex({a, b, c, c1});
          add_simplex({a, b, b1, c1});
          add_simplex({a, a1, b1, c1});
        } else {
          const int a = node(i, f[0]), b = node(i, f[1]);
          const int a1 = node(i + 1, f[0]), b1 = node(i + 1, f[1]);
          add_simplex({a, b, b1});
          add_simplex({a, a1, b1});
        }
      }
    }
  }

  void build_outer_weights() {
    outer_weights_.assign(na_, 0.0);
    const int outer = nr_ - 1;
    for (const auto& f : facets_) {
      Eigen::Matrix<double, N, N> pts;
      for (int k = 0; k < N; ++k) pts.col(k) = positions_[node(outer, f[k])];
      // Each vertex receives the volume of the cone over the facet, h * measure / n = |det| / n!.
      double fact = 1.0;
      for (int k = 2; k <= N; ++k) fact *= k;
      const double w = std::abs(pts.determinant()) / fact;
      for (int k = 0; k < N; ++k) outer_weights_[f[k]] += w / std::pow(r_out_, N);
    }
  }

  void build_incidence() {
    const int nn = node_count();
    inc_start_.assign(nn + 1, 0);
    for (const auto& e : elements_)
      for (int v : e.v) ++inc_start_[v + 1];
    for (int n = 0; n < nn; ++n) inc_start_[n + 1] += inc_start_[n];
    inc_elem_.resize(inc_start_[nn]);
    inc_local_.resize(inc_start_[nn]);
    std::vector<int> fill(inc_start_.begin(), inc_start_.end() - 1);
    for (int e = 0; e < static_cast<int>(elements_.size()); ++e) {
      for (int k = 0; k <= N; ++k) {
        const int v = elements_[e].v[k];
        inc_elem_[fill[v]] = e;
        inc_local_[fill[v]] = k;
        ++fill[v];
      }
    }
  }

  SphereGrid<N> sphere_;
  double r_out_;
  int nr_;
  int na_ = 0;
  std::vector<Vec<N>> dirs_;
  std::vector<double> weights_;
  std::vector<double> rho_;
  std::vector<double> s_;
  std::vector<Vec<N>> positions_;
  std::vector<std::array<int, N>> facets_;
  std::vector<Simplex<N>> elements_;
  std::vector<int> inc_start_, inc_elem_, inc_local_;
  std::vector<double> outer_weights_;
};

}  // namespace anicap
