#pragma once

// Plants and settings shared by several test files.

#include <vector>

#include "oadp/observer.hpp"
#include "oadp/riccati.hpp"
#include "oadp/sim.hpp"

namespace oadp::testing {

// Load-frequency-control plant, observer roots -5..-8.
inline LtiPlant power_plant() {
  LtiPlant pl;
  pl.A.resize(4, 4);
  pl.A << -0.0665, 8, 0, 0, 0, -3.663, 3.663, 0, -6.86, 0, -13.736, -13.736, 0.6, 0, 0, 0;
  pl.B.resize(4, 1);
  pl.B << 0, 0, 13.736, 0;
  pl.C.resize(1, 4);
  pl.C << 1, 0, 0, 0;
  return pl;
}

inline ObserverPoly power_poly() {
  const std::vector<double> roots{-5, -6, -7, -8};
  return ObserverPoly::from_roots(roots);
}

// Open-loop unstable plant (eigenvalues +-1), observer roots -6, -7.
inline LtiPlant unstable_plant() {
  LtiPlant pl;
  pl.A.resize(2, 2);
  pl.A << -11, 30, -4, 11;
  pl.B.resize(2, 1);
  pl.B << 10, 4;
  pl.C.resize(1, 2);
  pl.C << 1, 0;
  return pl;
}

inline ObserverPoly unstable_poly() {
  const std::vector<double> roots{-6, -7};
  return ObserverPoly::from_roots(roots);
}

inline Matrix eye(Index n) { return Matrix::Identity(n, n); }

inline AreProblem output_problem(const LtiPlant& pl, const Matrix& qy, const Matrix& r) {
  return AreProblem{pl.A, pl.B, pl.C.transpose() * qy * pl.C, r};
}

inline AreProblem ancillary_problem(const Parameterization& par, const Matrix& r) {
  return AreProblem{par.A_zeta, par.B_zeta, par.Q_zeta, r};
}

// Four-tone exploration used on the power plant.
inline ExplorationSignal power_signal() {
  ExplorationSignal sig;
  for (double w : {1.0, 7.0, 10.0, 16.0}) sig.sinusoids.push_back({20.0, w, 0.0, 0});
  return sig;
}

// Collection gain 34, -6, -21.8, -11.8 with 20 sin 3t switched on at t = 4.
inline ExplorationSignal unstable_signal() {
  ExplorationSignal sig;
  sig.zeta_gain.resize(1, 4);
  sig.zeta_gain << 34, -6, -21.8, -11.8;
  sig.sinusoids.push_back({20.0, 3.0, 0.0, 0});
  sig.start_time = 4.0;
  return sig;
}

}  // namespace oadp::testing
