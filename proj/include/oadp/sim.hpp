#pragma once

// Fixed-step RK4 simulation of the plant together with the input/output
// compensator zeta' = (I (x) A_cal) zeta + [I_m (x) b; 0] u + [0; I_p (x) b] y.

#include <cmath>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include "oadp/linalg.hpp"
#include "oadp/observer.hpp"

namespace oadp {

struct Sinusoid {
  double amplitude = 0.0;
  double omega = 0.0;
  double phase = 0.0;
  Index channel = 0;
};

/// u(t) = G_zeta zeta + G_x x + [t >= start_time] (sum_i a_i sin(w_i t + phi_i) + offset).
struct ExplorationSignal {
  Matrix zeta_gain;  // m x n_zeta, empty means zero
  Matrix state_gain;  // m x n, empty means zero
  std::vector<Sinusoid> sinusoids;
  Vector offset;  // m, empty means zero
  double start_time = 0.0;

  /// `active` selects whether the open-loop part is switched on.
  Vector evaluate(double t, bool active, const Vector& x, const Vector& zeta, Index m) const {
    Vector u = Vector::Zero(m);
    if (zeta_gain.size() > 0) u += zeta_gain * zeta;
    if (state_gain.size() > 0) u += state_gain * x;
    if (active) {
      for (const auto& s : sinusoids) u(s.channel) += s.amplitude * std::sin(s.omega * t + s.phase);
      if (offset.size() > 0) u += offset;
    }
    return u;
  }

  void validate(Index m, Index n, Index n_zeta) const {
    if (zeta_gain.size() > 0 && (zeta_gain.rows() != m || zeta_gain.cols() != n_zeta))
      throw Error("ExplorationSignal: zeta gain must be m x n_zeta");
    if (state_gain.size() > 0 && (state_gain.rows() != m || state_gain.cols() != n))
      throw Error("ExplorationSignal: state gain must be m x n");
    if (offset.size() > 0 && offset.size() != m)
      throw Error("ExplorationSignal: offset must have m entries");
    for (const auto& s : sinusoids) {
      if (s.channel < 0 || s.channel >= m) throw Error("ExplorationSignal: channel out of range");
      if (!std::isfinite(s.amplitude) || !std::isfinite(s.omega) || !std::isfinite(s.phase))
        throw Error("ExplorationSignal: non-finite sinusoid");
    }
  }
};

/// Samples stored column-wise: x.col(k) is the state at times[k].
struct Trajectory {
  double dt = 0.0;
  std::vector<double> times;
  Matrix x, zeta, u, y;

  Index samples() const { return static_cast<Index>(times.size()); }
};

class SimulationDiverged : public Error {
 public:
  SimulationDiverged(const std::string& what, Trajectory partial)
      : Error(what), partial_(std::move(partial)) {}
  const Trajectory& partial() const { return partial_; }

 private:
  Trajectory partial_;
};

/// Simulates on the grid t_begin + k dt, k = 0..N. The open-loop part of the
/// input is switched per step, on the step's left endpoint, so a start time on
/// the grid introduces no intra-step discontinuity.
inline Trajectory simulate(const LtiPlant& plant, const Parameterization& par,
                           const ExplorationSignal& signal, const Vector& x0, const Vector& zeta0,
                           double t_begin, double t_end, double dt,
                           double divergence_cap = 1e12) {
  plant.validate();
  const Index n = plant.n(), m = plant.m(), nz = par.n_zeta;
  if (!(dt > 0.0)) throw Error("simulate: dt must be positive");
  if (!(t_end > t_begin)) throw Error("simulate: empty time span");
  if (x0.size() != n) throw Error("simulate: x0 must have n entries");
  const Vector z0 = zeta0.size() == 0 ? Vector::Zero(nz) : zeta0;
  if (z0.size() != nz) throw Error("simulate: zeta0 must have n_zeta entries");
  signal.validate(m, n, nz);

  const double span = (t_end - t_begin) / dt;
  const auto steps = static_cast<Index>(std::llround(span));
  if (std::abs(span - static_cast<double>(steps)) > 1e-6)
    throw Error("simulate: dt must divide the time span");

  const Matrix in_inj = input_injection(par.n, par.m, par.p);
  auto rhs = [&](double t, bool active, const Vector& s) {
    const Vector x = s.head(n);
    const Vector z = s.tail(nz);
    const Vector u = signal.evaluate(t, active, x, z, m);
    const Vector y = plant.C * x;
    Vector ds(n + nz);
    ds.head(n) = plant.A * x + plant.B * u;
    ds.tail(nz) = par.compensator_A * z + in_inj * u + par.output_injection * y;
    return ds;
  };
  const double start_tol = 1e-9 * dt;
  auto is_active = [&](double t) { return t >= signal.start_time - start_tol; };

  Trajectory traj;
  traj.dt = dt;
  traj.times.resize(static_cast<std::size_t>(steps + 1));
  traj.x.resize(n, steps + 1);
  traj.zeta.resize(nz, steps + 1);
  traj.u.resize(m, steps + 1);
  traj.y.resize(plant.p(), steps + 1);

  Vector s(n + nz);
  s << x0, z0;
  auto store = [&](Index k, double t) {
    traj.times[static_cast<std::size_t>(k)] = t;
    traj.x.col(k) = s.head(n);
    traj.zeta.col(k) = s.tail(nz);
    traj.u.col(k) = signal.evaluate(t, is_active(t), s.head(n), s.tail(nz), m);
    traj.y.col(k) = plant.C * s.head(n);
  };
  store(0, t_begin);
  for (Index k = 0; k < steps; ++k) {
    const double t = t_begin + static_cast<double>(k) * dt;
    const bool active = is_active(t);
    const Vector k1 = rhs(t, active, s);
    const Vector k2 = rhs(t + 0.5 * dt, active, s + 0.5 * dt * k1);
    const Vector k3 = rhs(t + 0.5 * dt, active, s + 0.5 * dt * k2);
    const Vector k4 = rhs(t + dt, active, s + dt * k3);
    s += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!s.allFinite() || s.norm() > divergence_cap) {
      const Index kept = k + 1;
      traj.times.resize(static_cast<std::size_t>(kept));
      traj.x.conservativeResize(Eigen::NoChange, kept);
      traj.zeta.conservativeResize(Eigen::NoChange, kept);
      traj.u.conservativeResize(Eigen::NoChange, kept);
      traj.y.conservativeResize(Eigen::NoChange, kept);
      throw SimulationDiverged("simulate: divergence at t = " + std::to_string(t + dt),
                               std::move(traj));
    }
    store(k + 1, t_begin + static_cast<double>(k + 1) * dt);
  }
  return traj;
}

/// ||M zeta(t) - x(t)|| per sample.
inline Vector observation_error(const Trajectory& traj, const Matrix& mm) {
  if (mm.cols() != traj.zeta.rows() || mm.rows() != traj.x.rows())
    throw Error("observation_error: M is not conformable with the trajectory");
  Vector e(traj.samples());
  for (Index k = 0; k < traj.samples(); ++k) e(k) = (mm * traj.zeta.col(k) - traj.x.col(k)).norm();
  return e;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const auto cols = [&os](const char* prefix, Index count) {
    for (Index i = 0; i < count; ++i) os << ',' << prefix << (i + 1);
  };
  os << 't';
  cols("x", traj.x.rows());
  cols("zeta", traj.zeta.rows());
  cols("u", traj.u.rows());
  cols("y", traj.y.rows());
  os << '\n' << std::setprecision(17);
  for (Index k = 0; k < traj.samples(); ++k) {
    os << traj.times[static_cast<std::size_t>(k)];
    for (const Matrix* m : {&traj.x, &traj.zeta, &traj.u, &traj.y})
      for (Index i = 0; i < m->rows(); ++i) os << ',' << (*m)(i, k);
    os << '\n';
  }
}

}  // namespace oadp
