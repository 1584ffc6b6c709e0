#pragma once

// Model-based ground truth: a matrix-sign-function ARE oracle, the Kleinman
// policy iteration, the stochastic-approximation value iteration with
// reset sets, and the infinite-horizon cost matrix of a feedback gain.

#include <Eigen/Eigenvalues>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oadp/linalg.hpp"

namespace oadp {

struct AreProblem {
  Matrix A, B, Q, R;

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }

  void validate() const {
    if (A.rows() != A.cols()) throw Error("AreProblem: A must be square");
    if (B.rows() != n()) throw Error("AreProblem: B row count must match A");
    if (Q.rows() != n() || Q.cols() != n()) throw Error("AreProblem: Q must be n x n");
    if (R.rows() != m() || R.cols() != m()) throw Error("AreProblem: R must be m x m");
    if (!A.allFinite() || !B.allFinite() || !Q.allFinite() || !R.allFinite())
      throw Error("AreProblem: non-finite entry");
    const Matrix qs = symmetrize(Q), rs = symmetrize(R);
    const double qmin = Eigen::SelfAdjointEigenSolver<Matrix>(qs).eigenvalues().minCoeff();
    if (qmin < -1e-10 * std::max(1.0, qs.norm())) throw Error("AreProblem: Q is not PSD");
    const double rmin = Eigen::SelfAdjointEigenSolver<Matrix>(rs).eigenvalues().minCoeff();
    if (!(rmin > 0.0)) throw Error("AreProblem: R is not positive definite");
  }
};

/// A'P + PA + Q - P B R^{-1} B' P.
inline Matrix riccati_map(const AreProblem& prob, const Matrix& p) {
  const Matrix rinv_bt = prob.R.ldlt().solve(prob.B.transpose());
  return prob.A.transpose() * p + p * prob.A + prob.Q - p * prob.B * rinv_bt * p;
}

inline double are_residual(const AreProblem& prob, const Matrix& p) {
  return norm2(riccati_map(prob, p));
}

/// K = -R^{-1} B' P.
inline Matrix optimal_gain(const AreProblem& prob, const Matrix& p) {
  return -prob.R.ldlt().solve(prob.B.transpose() * p);
}

/// Largest real part of the spectrum.
inline double spectral_abscissa(const Matrix& f) {
  if (f.rows() != f.cols()) throw Error("spectral_abscissa: matrix must be square");
  if (f.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<Matrix> es(f, false);
  if (es.info() != Eigen::Success) throw Error("spectral_abscissa: eigenvalue iteration failed");
  return es.eigenvalues().real().maxCoeff();
}

struct AreSolution {
  Matrix P;
  Matrix K;
  int sign_iterations = 0;
};

/// Stabilizing ARE solution from the sign of the Hamiltonian
/// [[A, -B R^{-1} B'], [-Q, -A']], using determinant-scaled Newton steps.
inline AreSolution solve_are_sign(const AreProblem& prob) {
  prob.validate();
  const Index n = prob.n();
  const Matrix g = prob.B * prob.R.ldlt().solve(prob.B.transpose());
  Matrix h(2 * n, 2 * n);
  h << prob.A, -g, -symmetrize(prob.Q), -prob.A.transpose();

  Matrix z = h;
  const double dim = static_cast<double>(2 * n);
  int iter = 0;
  bool converged = false;
  for (; iter < 100; ++iter) {
    Eigen::PartialPivLU<Matrix> lu(z);
    const double det = std::abs(lu.determinant());
    if (!(det > 0.0) || !std::isfinite(det))
      throw Error("solve_are_sign: Hamiltonian has near-imaginary-axis eigenvalues");
    // scaling is switched off close to convergence, where it only adds noise
    const double c = (iter < 40) ? std::pow(det, -1.0 / dim) : 1.0;
    const Matrix zinv = lu.inverse();
    const Matrix next = 0.5 * (c * z + zinv / c);
    const double change = (next - z).norm() / std::max(1.0, next.norm());
    z = next;
    if (!z.allFinite())
      throw Error("solve_are_sign: Hamiltonian has near-imaginary-axis eigenvalues");
    if (change < 1e-13) {
      converged = true;
      ++iter;
      break;
    }
  }
  if (!converged)
    throw Error("solve_are_sign: Hamiltonian has near-imaginary-axis eigenvalues");

  // (S + I) [I; P] = 0  =>  [S12; S22 + I] P = -[S11 + I; S21]
  const Matrix eye = Matrix::Identity(n, n);
  Matrix lhs(2 * n, n), rhs(2 * n, n);
  lhs << z.topRightCorner(n, n), z.bottomRightCorner(n, n) + eye;
  rhs << z.topLeftCorner(n, n) + eye, z.bottomLeftCorner(n, n);
  Eigen::ColPivHouseholderQR<Matrix> qr(lhs);
  qr.setThreshold(1e-10);
  if (qr.rank() < n) throw Error("solve_are_sign: stabilizing subspace extraction failed");
  Matrix p = qr.solve(-rhs);
  p = (0.5 * (p + p.transpose())).eval();
  if (!p.allFinite()) throw Error("solve_are_sign: stabilizing subspace extraction failed");

  AreSolution out;
  out.P = p;
  out.K = optimal_gain(prob, p);
  out.sign_iterations = iter;
  return out;
}

struct IterateRecord {
  int k = 0;
  Matrix P;
  Matrix K;
  double are_residual = std::numeric_limits<double>::quiet_NaN();
  double spectral_abscissa = std::numeric_limits<double>::quiet_NaN();
  // PI: ||P_k - P_{k-1}||; VI: ||P~_{k+1} - P_k|| / eps_k.
  double step_norm = std::numeric_limits<double>::quiet_NaN();
  int epoch = 0;  // VI reset counter q
  bool reset = false;
};

struct IterateHistory {
  std::vector<IterateRecord> records;
  bool converged = false;
  std::string status;

  const IterateRecord& last() const {
    if (records.empty()) throw Error("IterateHistory: empty");
    return records.back();
  }
};

/// Kleinman policy iteration from a stabilizing K0. Record k holds the gain
/// K_k and the Lyapunov solution P_k it induces.
inline IterateHistory kleinman_pi(const AreProblem& prob, const Matrix& k0,
                                  double tol, int max_iters) {
  prob.validate();
  if (k0.rows() != prob.m() || k0.cols() != prob.n())
    throw Error("kleinman_pi: K0 must be m x n");
  if (!(spectral_abscissa(prob.A + prob.B * k0) < 0.0))
    throw Error("kleinman_pi: initial gain not stabilizing");

  IterateHistory hist;
  Matrix k = k0;
  for (int it = 0; it < max_iters; ++it) {
    const Matrix ak = prob.A + prob.B * k;
    IterateRecord rec;
    rec.k = it;
    rec.K = k;
    rec.spectral_abscissa = spectral_abscissa(ak);
    rec.P = solve_lyapunov(ak, prob.Q + k.transpose() * prob.R * k);
    rec.are_residual = are_residual(prob, rec.P);
    if (!hist.records.empty()) rec.step_norm = norm2(rec.P - hist.records.back().P);
    const bool done = !hist.records.empty() && rec.step_norm < tol;
    k = optimal_gain(prob, rec.P);
    hist.records.push_back(std::move(rec));
    if (done) {
      hist.converged = true;
      hist.status = "converged";
      return hist;
    }
  }
  hist.status = "not converged";
  return hist;
}

struct ViSchedule {
  std::function<double(int)> step;   // k -> eps_k > 0
  std::function<double(int)> bound;  // q -> norm cap of B_q
  double convergence_eps = 0.01;
  int max_iters = 100000;
  int consecutive_hits = 3;
  double psd_tol = 1e-8;

  /// eps_k = scale / (k + 1), caps bound_scale * (q + 1).
  static ViSchedule harmonic(double scale, double bound_scale, double eps,
                             int max_iters) {
    ViSchedule s;
    s.step = [scale](int k) { return scale / static_cast<double>(k + 1); };
    s.bound = [bound_scale](int q) { return bound_scale * static_cast<double>(q + 1); };
    s.convergence_eps = eps;
    s.max_iters = max_iters;
    return s;
  }
};

/// Membership in B_q: symmetric PSD (to psd_tol) with induced norm below cap.
inline bool in_bound_set(const Matrix& p, double cap, double psd_tol) {
  if (!p.allFinite()) return false;
  if (!(norm2(p) < cap)) return false;
  const double lmin = Eigen::SelfAdjointEigenSolver<Matrix>(p, Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
  return lmin >= -psd_tol;
}

namespace detail {

/// Shared reset/stop loop. `direction(P, k)` returns the Riccati increment D
/// such that P~ = P + eps_k D; `annotate(rec)` fills model-dependent fields.
template <class Direction, class Annotate>
IterateHistory run_vi_loop(const Matrix& p0, const ViSchedule& sched,
                           Direction&& direction, Annotate&& annotate) {
  if (!sched.step || !sched.bound) throw Error("ViSchedule: step and bound required");
  const Matrix start = symmetrize(p0);
  IterateHistory hist;
  Matrix p = start;
  int q = 0;
  int hits = 0;
  bool was_reset = false;
  for (int k = 0; k < sched.max_iters; ++k) {
    const double eps = sched.step(k);
    if (!(eps > 0.0)) throw Error("ViSchedule: step size must be positive");
    const Matrix d = direction(p, k);
    Matrix next = p + eps * d;
    next = (0.5 * (next + next.transpose())).eval();

    IterateRecord rec;
    rec.k = k;
    rec.P = p;
    rec.epoch = q;
    rec.reset = was_reset;
    annotate(rec);
    was_reset = false;

    if (!in_bound_set(next, sched.bound(q), sched.psd_tol)) {
      rec.step_norm = std::numeric_limits<double>::infinity();
      hist.records.push_back(std::move(rec));
      p = start;
      ++q;
      hits = 0;
      was_reset = true;
      continue;
    }
    rec.step_norm = norm2(next - p) / eps;
    const bool hit = rec.step_norm < sched.convergence_eps;
    hist.records.push_back(std::move(rec));
    hits = hit ? hits + 1 : 0;
    if (hits >= std::max(1, sched.consecutive_hits)) {
      hist.converged = true;
      hist.status = "converged";
      return hist;
    }
    p = next;
  }
  hist.status = "not converged";
  return hist;
}

}  // namespace detail

/// Value iteration on the Riccati map from any PSD P0.
inline IterateHistory model_vi(const AreProblem& prob, const Matrix& p0,
                               const ViSchedule& sched) {
  prob.validate();
  if (p0.rows() != prob.n() || p0.cols() != prob.n()) throw Error("model_vi: P0 must be n x n");
  if (!in_bound_set(symmetrize(p0), std::numeric_limits<double>::infinity(), sched.psd_tol))
    throw Error("model_vi: P0 must be positive semidefinite");
  return detail::run_vi_loop(
      p0, sched, [&](const Matrix& p, int) { return riccati_map(prob, p); },
      [&](IterateRecord& rec) {
        rec.K = optimal_gain(prob, rec.P);
        rec.are_residual = are_residual(prob, rec.P);
        rec.spectral_abscissa = spectral_abscissa(prob.A + prob.B * rec.K);
      });
}

/// Infinite-horizon cost matrix of u = Kx; nullopt when A + BK is not Hurwitz
/// (the cost is then unbounded).
inline std::optional<Matrix> cost_matrix(const AreProblem& prob, const Matrix& k) {
  const Matrix f = prob.A + prob.B * k;
  if (!(spectral_abscissa(f) < 0.0)) return std::nullopt;
  return solve_lyapunov(f, prob.Q + k.transpose() * prob.R * k);
}

}  // namespace oadp
