#pragma once

// Data-stack matrices built from a sampled trajectory over knots
// t_0 < t_1 < ... < t_s. One row per interval:
//   delta_a : vecv(a(t_q)) - vecv(a(t_{q-1}))
//   Gamma_ab: int a (x) b
//   I_aa    : int vecv(a)
//   I_au    : int a (x) R u

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "oadp/linalg.hpp"
#include "oadp/sim.hpp"

namespace oadp {

struct SampleGrid {
  std::vector<double> knots;

  Index intervals() const { return static_cast<Index>(knots.size()) - 1; }

  static SampleGrid uniform(double t0, double spacing, Index s) {
    if (s < 1) throw Error("SampleGrid: need at least one interval");
    if (!(spacing > 0.0)) throw Error("SampleGrid: spacing must be positive");
    SampleGrid g;
    for (Index q = 0; q <= s; ++q) g.knots.push_back(t0 + spacing * static_cast<double>(q));
    return g;
  }
};

enum class StackKind { state, output, both };

struct DataStacks {
  Index s = 0, n = 0, m = 0, p = 0, n_zeta = 0;
  bool has_state = false, has_output = false;

  Matrix delta_zeta;        // s x n_zeta(n_zeta+1)/2
  Matrix gamma_zeta_zeta;   // s x n_zeta^2
  Matrix gamma_zeta_u;      // s x n_zeta m
  Matrix gamma_yy;          // s x p^2
  Matrix i_zeta_zeta;       // s x n_zeta(n_zeta+1)/2
  Matrix i_zeta_u;          // s x n_zeta m, R-weighted
  Matrix i_yy;              // s x p(p+1)/2

  Matrix delta_x, gamma_xx, gamma_xu, i_xx, i_xu;
};

namespace detail {

/// Quadrature weights on `count` uniform subintervals: composite Simpson,
/// closing with a 3/8 panel for odd counts (trapezoid when count == 1).
inline std::vector<double> quadrature_weights(Index count, double h) {
  std::vector<double> w(static_cast<std::size_t>(count + 1), 0.0);
  auto at = [&w](Index i) -> double& { return w[static_cast<std::size_t>(i)]; };
  if (count == 1) {
    at(0) = at(1) = 0.5 * h;
    return w;
  }
  const Index simpson = (count % 2 == 0) ? count : count - 3;
  for (Index i = 0; i < simpson; i += 2) {
    at(i) += h / 3.0;
    at(i + 1) += 4.0 * h / 3.0;
    at(i + 2) += h / 3.0;
  }
  if (simpson != count) {
    const Index b = simpson;
    at(b) += 3.0 * h / 8.0;
    at(b + 1) += 9.0 * h / 8.0;
    at(b + 2) += 9.0 * h / 8.0;
    at(b + 3) += 3.0 * h / 8.0;
  }
  return w;
}

/// Maps each knot to its sample index; every knot must sit on the grid.
inline std::vector<Index> knot_indices(const Trajectory& traj, const SampleGrid& grid) {
  if (grid.knots.size() < 2) throw Error("build_stacks: need at least one interval");
  if (traj.samples() < 2) throw Error("build_stacks: trajectory too short");
  const double t_first = traj.times.front();
  std::vector<Index> idx;
  for (std::size_t q = 0; q < grid.knots.size(); ++q) {
    const double pos = (grid.knots[q] - t_first) / traj.dt;
    const auto k = static_cast<Index>(std::llround(pos));
    if (std::abs(pos - static_cast<double>(k)) > 1e-6 || k < 0 || k >= traj.samples())
      throw Error("build_stacks: grid alignment (knot " + std::to_string(grid.knots[q]) +
                  " is not on the simulation grid)");
    if (!idx.empty() && k <= idx.back()) throw Error("build_stacks: knots must increase");
    idx.push_back(k);
  }
  return idx;
}

/// Row q = quadrature over interval q of integrand(k) (a column vector).
template <class Integrand>
Matrix integrate_rows(const std::vector<Index>& idx, double dt, Index width, Integrand&& f) {
  const Index s = static_cast<Index>(idx.size()) - 1;
  Matrix out = Matrix::Zero(s, width);
  for (Index q = 0; q < s; ++q) {
    const Index a = idx[static_cast<std::size_t>(q)], b = idx[static_cast<std::size_t>(q + 1)];
    const auto w = quadrature_weights(b - a, dt);
    Vector acc = Vector::Zero(width);
    for (Index k = a; k <= b; ++k) acc += w[static_cast<std::size_t>(k - a)] * f(k);
    out.row(q) = acc.transpose();
  }
  return out;
}

inline Matrix delta_rows(const std::vector<Index>& idx, const Matrix& series) {
  const Index s = static_cast<Index>(idx.size()) - 1;
  Matrix out(s, packed_size(series.rows()));
  for (Index q = 0; q < s; ++q)
    out.row(q) = (vecv(series.col(idx[static_cast<std::size_t>(q + 1)])) -
                  vecv(series.col(idx[static_cast<std::size_t>(q)])))
                     .transpose();
  return out;
}

}  // namespace detail

inline DataStacks build_stacks(const Trajectory& traj, const SampleGrid& grid, const Matrix& r,
                               StackKind which = StackKind::output) {
  const Index m = traj.u.rows();
  if (r.rows() != m || r.cols() != m) throw Error("build_stacks: R must be m x m");
  const auto idx = detail::knot_indices(traj, grid);
  const double dt = traj.dt;

  DataStacks st;
  st.s = grid.intervals();
  st.n = traj.x.rows();
  st.m = m;
  st.p = traj.y.rows();
  st.n_zeta = traj.zeta.rows();
  const Matrix ru = r * traj.u;

  auto pair_stacks = [&](const Matrix& a, Matrix& delta, Matrix& gamma_aa, Matrix& gamma_au,
                         Matrix& i_aa, Matrix& i_au) {
    const Index na = a.rows();
    delta = detail::delta_rows(idx, a);
    gamma_aa = detail::integrate_rows(idx, dt, na * na, [&](Index k) {
      return kron(Vector(a.col(k)), Vector(a.col(k)));
    });
    gamma_au = detail::integrate_rows(idx, dt, na * m, [&](Index k) {
      return kron(Vector(a.col(k)), Vector(traj.u.col(k)));
    });
    i_aa = detail::integrate_rows(idx, dt, packed_size(na),
                                  [&](Index k) { return vecv(a.col(k)); });
    i_au = detail::integrate_rows(idx, dt, na * m, [&](Index k) {
      return kron(Vector(a.col(k)), Vector(ru.col(k)));
    });
  };

  if (which != StackKind::state) {
    if (st.n_zeta == 0) throw Error("build_stacks: trajectory carries no compensator state");
    st.has_output = true;
    pair_stacks(traj.zeta, st.delta_zeta, st.gamma_zeta_zeta, st.gamma_zeta_u, st.i_zeta_zeta,
                st.i_zeta_u);
    st.gamma_yy = detail::integrate_rows(idx, dt, st.p * st.p, [&](Index k) {
      return kron(Vector(traj.y.col(k)), Vector(traj.y.col(k)));
    });
    st.i_yy = detail::integrate_rows(idx, dt, packed_size(st.p),
                                     [&](Index k) { return vecv(traj.y.col(k)); });
  }
  if (which != StackKind::output) {
    st.has_state = true;
    pair_stacks(traj.x, st.delta_x, st.gamma_xx, st.gamma_xu, st.i_xx, st.i_xu);
  }
  return st;
}

struct RankCondition {
  std::string name;
  std::string matrix;  // which stack(s) are tested
  Index required = 0;
  Index achieved = 0;
  bool satisfied = false;
  Vector singular_values;
};

struct RankReport {
  double tol = 1e-8;
  bool equilibrated = true;
  std::vector<RankCondition> conditions;

  const RankCondition* find(const std::string& name) const {
    for (const auto& c : conditions)
      if (c.name == name) return &c;
    return nullptr;
  }
};

inline Matrix hcat(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

/// Rank is judged after scaling every nonzero column to unit norm, the same
/// view the least-squares solver takes; compensator states differ in scale
/// by orders of magnitude and would otherwise hide well-determined columns.
inline RankCondition evaluate_rank_condition(std::string name, std::string matrix,
                                             const Matrix& a, Index required, double tol,
                                             bool equilibrate = true) {
  RankCondition c;
  c.name = std::move(name);
  c.matrix = std::move(matrix);
  c.required = required;
  Matrix scaled = a;
  if (equilibrate)
    for (Index j = 0; j < scaled.cols(); ++j)
      if (const double cn = scaled.col(j).norm(); cn > 0.0) scaled.col(j) /= cn;
  c.singular_values = singular_values(scaled);
  c.achieved = (c.singular_values.size() == 0 || c.singular_values(0) == 0.0)
                   ? 0
                   : (c.singular_values.array() > tol * c.singular_values(0)).count();
  c.satisfied = c.achieved == required;
  return c;
}

/// Full-column-rank preconditions of every regression family:
///   state_pi    [Gamma_xx, Gamma_xu]       n(n+1)/2 + m n
///   state_vi    [I_xx, I_xu]               n(n+1)/2 + m n
///   output_pi   [Gamma_zz, Gamma_zu]       nz(nz+1)/2 + m nz
///   output_vi   [I_zz, I_zu]               nz(nz+1)/2 + m nz
///   improved_pi Gamma_zz                   nz(nz+1)/2
///   improved_vi I_zz                       nz(nz+1)/2
inline RankReport rank_report(const DataStacks& st, double tol = 1e-8, bool equilibrate = true) {
  RankReport rep;
  rep.tol = tol;
  rep.equilibrated = equilibrate;
  if (st.has_state) {
    const Index need = packed_size(st.n) + st.m * st.n;
    rep.conditions.push_back(evaluate_rank_condition(
        "state_pi", "[Gamma_xx, Gamma_xu]", hcat(st.gamma_xx, st.gamma_xu), need, tol, equilibrate));
    rep.conditions.push_back(evaluate_rank_condition("state_vi", "[I_xx, I_xu]",
                                                     hcat(st.i_xx, st.i_xu), need, tol, equilibrate));
  }
  if (st.has_output) {
    const Index nz = st.n_zeta;
    const Index need = packed_size(nz) + st.m * nz;
    rep.conditions.push_back(evaluate_rank_condition(
        "output_pi", "[Gamma_zz, Gamma_zu]", hcat(st.gamma_zeta_zeta, st.gamma_zeta_u), need, tol, equilibrate));
    rep.conditions.push_back(evaluate_rank_condition(
        "output_vi", "[I_zz, I_zu]", hcat(st.i_zeta_zeta, st.i_zeta_u), need, tol, equilibrate));
    rep.conditions.push_back(evaluate_rank_condition("improved_pi", "Gamma_zz",
                                                     st.gamma_zeta_zeta, packed_size(nz), tol, equilibrate));
    rep.conditions.push_back(
        evaluate_rank_condition("improved_vi", "I_zz", st.i_zeta_zeta, packed_size(nz), tol, equilibrate));
  }
  return rep;
}

inline void write_matrix_csv(std::ostream& os, const Matrix& a, const std::string& prefix = "c") {
  for (Index j = 0; j < a.cols(); ++j) os << (j ? "," : "") << prefix << (j + 1);
  os << '\n' << std::setprecision(17);
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) os << (j ? "," : "") << a(i, j);
    os << '\n';
  }
}

}  // namespace oadp
