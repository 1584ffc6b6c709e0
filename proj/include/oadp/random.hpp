#pragma once

// Seeded generators for property suites and randomized experiment configs.
// Everything draws from one std::mt19937_64 so a seed pins the whole
// instance on a given standard library.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "oadp/linalg.hpp"
#include "oadp/observer.hpp"
#include "oadp/riccati.hpp"

namespace oadp {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  Index integer(Index lo, Index hi) {
    return std::uniform_int_distribution<Index>(lo, hi)(engine_);
  }

  Matrix gaussian(Index rows, Index cols) {
    Matrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) a(i, j) = normal();
    return a;
  }

  Vector gaussian(Index n) { return gaussian(n, 1); }

  /// Random PSD matrix of the given rank.
  Matrix psd(Index n, Index rank) {
    const Matrix g = gaussian(n, rank);
    return g * g.transpose();
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

struct RandomPlantOptions {
  Index n = 3, m = 1, p = 1;
  bool require_controllable = true;
  bool require_observable = true;
  // When set, A is shifted so its spectral abscissa equals -stability_margin.
  bool stable = false;
  double stability_margin = 0.5;
  int max_attempts = 1000;
};

inline LtiPlant random_plant(Rng& rng, const RandomPlantOptions& o) {
  for (int attempt = 0; attempt < o.max_attempts; ++attempt) {
    LtiPlant pl;
    pl.A = rng.gaussian(o.n, o.n);
    pl.B = rng.gaussian(o.n, o.m);
    pl.C = rng.gaussian(o.p, o.n);
    if (o.stable) {
      const double shift = spectral_abscissa(pl.A) + o.stability_margin;
      pl.A -= shift * Matrix::Identity(o.n, o.n);
    }
    if (o.require_controllable && !is_controllable(pl.A, pl.B)) continue;
    if (o.require_observable && numerical_rank(observability_matrix(pl.A, pl.C), 1e-10) < o.n)
      continue;
    return pl;
  }
  throw Error("random_plant: attempts exhausted");
}

/// Distinct negative real roots in [-hi, -lo], sorted descending.
inline std::vector<double> random_hurwitz_roots(Rng& rng, Index n, double lo = 1.0,
                                                double hi = 6.0) {
  std::vector<double> roots;
  while (static_cast<Index>(roots.size()) < n) {
    const double r = -rng.uniform(lo, hi);
    bool far = true;
    for (double s : roots) far = far && std::abs(s - r) > 0.2;
    if (far) roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end(), std::greater<>());
  return roots;
}

/// Stabilizable and detectable, but with an unobservable stable mode and an
/// uncontrollable stable mode, assembled in a random basis.
inline AreProblem random_stabilizable_detectable(Rng& rng, Index n, Index m) {
  if (n < 3) throw Error("random_stabilizable_detectable: need n >= 3");
  for (int attempt = 0; attempt < 1000; ++attempt) {
    // block form: [core | uncontrollable stable | unobservable stable]
    const Index nc = n - 2;
    Matrix a = Matrix::Zero(n, n);
    a.topLeftCorner(nc, nc) = rng.gaussian(nc, nc);
    a(nc, nc) = -rng.uniform(0.5, 3.0);          // uncontrollable, observed
    a(nc + 1, nc + 1) = -rng.uniform(0.5, 3.0);  // controllable, unobserved
    a.block(0, nc, nc, 1) = rng.gaussian(nc, 1); // couples the stable mode in
    a.block(nc + 1, 0, 1, nc) = rng.gaussian(1, nc);
    Matrix b = Matrix::Zero(n, m);
    b.topRows(nc) = rng.gaussian(nc, m);
    b.row(nc + 1) = rng.gaussian(1, m);
    Matrix c = Matrix::Zero(1, n);
    c.leftCols(nc) = rng.gaussian(1, nc);
    c(0, nc) = rng.normal();
    // a random orthogonal change of basis hides the structure without
    // degrading the conditioning
    const Matrix t = Eigen::HouseholderQR<Matrix>(rng.gaussian(n, n)).householderQ();
    const Matrix tinv = t.transpose();
    AreProblem prob;
    prob.A = t * a * tinv;
    prob.B = t * b;
    const Matrix ct = c * tinv;
    prob.Q = ct.transpose() * ct;
    prob.R = Matrix::Identity(m, m) + 0.1 * rng.psd(m, m);
    if (!is_stabilizable(prob.A, prob.B) || !is_detectable(prob.A, ct)) continue;
    if (is_controllable(prob.A, prob.B)) continue;
    if (numerical_rank(observability_matrix(prob.A, ct), 1e-9) == n) continue;
    return prob;
  }
  throw Error("random_stabilizable_detectable: attempts exhausted");
}

/// A stabilizing gain for (A, B) from an auxiliary ARE with Q = I, R = I.
inline Matrix stabilizing_gain(const Matrix& a, const Matrix& b) {
  AreProblem aux{a, b, Matrix::Identity(a.rows(), a.rows()), Matrix::Identity(b.cols(), b.cols())};
  return solve_are_sign(aux).K;
}

}  // namespace oadp
