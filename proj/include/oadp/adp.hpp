#pragma once

// Data-driven iteration engines. Each algorithm turns the data stacks into a
// least-squares regression per iteration:
//   state_pi / state_vi                 unknowns (P, K) or (H, K) over x
//   output_pi_original / _vi_original   the same over zeta
//   output_pi_improved / _vi_improved   P (or H) only; the gain follows in
//                                       closed form from the known B_zeta

#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "oadp/linalg.hpp"
#include "oadp/riccati.hpp"
#include "oadp/stacks.hpp"

namespace oadp {

enum class AdpAlgorithm {
  state_pi,
  state_vi,
  output_pi_original,
  output_vi_original,
  output_pi_improved,
  output_vi_improved,
};

inline const char* to_string(AdpAlgorithm a) {
  switch (a) {
    case AdpAlgorithm::state_pi: return "state-pi";
    case AdpAlgorithm::state_vi: return "state-vi";
    case AdpAlgorithm::output_pi_original: return "output-pi";
    case AdpAlgorithm::output_vi_original: return "output-vi";
    case AdpAlgorithm::output_pi_improved: return "improved-pi";
    case AdpAlgorithm::output_vi_improved: return "improved-vi";
  }
  return "unknown";
}

/// Name of the rank condition gating each algorithm in a RankReport.
inline const char* rank_condition_for(AdpAlgorithm a) {
  switch (a) {
    case AdpAlgorithm::state_pi: return "state_pi";
    case AdpAlgorithm::state_vi: return "state_vi";
    case AdpAlgorithm::output_pi_original: return "output_pi";
    case AdpAlgorithm::output_vi_original: return "output_vi";
    case AdpAlgorithm::output_pi_improved: return "improved_pi";
    case AdpAlgorithm::output_vi_improved: return "improved_vi";
  }
  return "";
}

/// design * [vecs(S); vec(G)] = target, where S is sym_dim x sym_dim and G is
/// gain_rows x gain_cols (absent when gain_rows == 0).
struct Regression {
  Matrix design;
  Vector target;
  Index sym_dim = 0;
  Index gain_rows = 0;
  Index gain_cols = 0;
  std::string layout;

  Index unknowns() const { return packed_size(sym_dim) + gain_rows * gain_cols; }
};

struct Reference {
  Matrix P;
  Matrix K;
};

struct AdpOptions {
  double tol = 0.01;         // PI stopping threshold on ||P_k - P_{k-1}||
  int max_iters = 100;       // PI only; VI uses its schedule
  double rank_tol = 1e-8;    // stack rank gate
  LeastSquaresOptions solver;
  double divergence_cap = 1e8;
  std::optional<Reference> reference;
};

struct AdpResult {
  AdpAlgorithm algorithm = AdpAlgorithm::state_pi;
  IterateHistory history;
  bool converged = false;
  int iterations = 0;
  Index unknowns = 0;
  std::vector<double> p_error;  // per record, against the reference
  std::vector<double> k_error;
  RankReport rank;
  Matrix P;  // final value estimate
  Matrix K;  // final gain
  double final_p_error = std::numeric_limits<double>::quiet_NaN();
  double final_k_error = std::numeric_limits<double>::quiet_NaN();
};

class RankDeficientError : public Error {
 public:
  RankDeficientError(const std::string& what, RankReport report)
      : Error(what), report_(std::move(report)) {}
  const RankReport& report() const { return report_; }

 private:
  RankReport report_;
};

class AdpDiverged : public Error {
 public:
  AdpDiverged(const std::string& what, AdpResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const AdpResult& partial() const { return partial_; }

 private:
  AdpResult partial_;
};

inline double normalized_error(const Matrix& x, const Matrix& ref) {
  const double d = norm2(ref);
  return d > 0.0 ? norm2(x - ref) / d : norm2(x);
}

namespace detail {

inline void require(bool ok, const char* what) {
  if (!ok) throw Error(what);
}

inline void check_square(const Matrix& a, Index n, const char* what) {
  if (a.rows() != n || a.cols() != n) throw Error(what);
}

// Rows of Gamma_ab (I (x) W): block j of vec columns is weighted by W.
inline Matrix kron_identity_right(const Matrix& gamma, Index na, const Matrix& w) {
  return gamma * kron(Matrix::Identity(na, na), w);
}

inline void gate(const DataStacks& st, AdpAlgorithm alg, double tol, RankReport& out) {
  out = rank_report(st, tol);
  const RankCondition* c = out.find(rank_condition_for(alg));
  if (c == nullptr)
    throw Error(std::string(to_string(alg)) + ": stacks lack the required layout");
  if (!c->satisfied)
    throw RankDeficientError(std::string(to_string(alg)) + ": rank condition " + c->name +
                                 " fails (rank " + std::to_string(c->achieved) + " < " +
                                 std::to_string(c->required) + ")",
                             out);
}

inline LeastSquaresResult solve_checked(const Regression& reg, const LeastSquaresOptions& opts,
                                        const RankReport& report, const char* who, int k) {
  if (reg.design.rows() < reg.design.cols())
    throw RankDeficientError(std::string(who) + ": fewer data rows than unknowns", report);
  LeastSquaresResult ls = least_squares(reg.design, reg.target, opts);
  if (ls.rank < reg.design.cols())
    throw RankDeficientError(std::string(who) + ": design matrix rank " +
                                 std::to_string(ls.rank) + " < " +
                                 std::to_string(reg.design.cols()) + " at iteration " +
                                 std::to_string(k),
                             report);
  return ls;
}

inline Matrix sym_part(const Regression& reg, const Vector& sol) {
  return unvecs(sol.head(packed_size(reg.sym_dim)));
}

inline Matrix gain_part(const Regression& reg, const Vector& sol) {
  return unvec(sol.tail(reg.gain_rows * reg.gain_cols), reg.gain_rows, reg.gain_cols);
}

inline void fill_errors(AdpResult& res) {
  res.iterations = static_cast<int>(res.history.records.size());
  res.converged = res.history.converged;
  if (!res.P.size() && !res.history.records.empty()) res.P = res.history.last().P;
  if (!res.K.size() && !res.history.records.empty()) res.K = res.history.last().K;
}

inline void attach_reference(AdpResult& res, const std::optional<Reference>& ref) {
  if (!ref) return;
  res.p_error.clear();
  res.k_error.clear();
  for (const auto& r : res.history.records) {
    res.p_error.push_back(normalized_error(r.P, ref->P));
    res.k_error.push_back(r.K.size() ? normalized_error(r.K, ref->K)
                                     : std::numeric_limits<double>::quiet_NaN());
  }
  if (res.P.size()) res.final_p_error = normalized_error(res.P, ref->P);
  if (res.K.size()) res.final_k_error = normalized_error(res.K, ref->K);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Regression builders

/// [delta_x, -2 Gamma_xx (I (x) K'R) + 2 Gamma_xu (I (x) R)] [vecs P; vec K+] =
/// -Gamma_xx vec(Q + K'RK).
inline Regression state_pi_regression(const DataStacks& st, const Matrix& q, const Matrix& r,
                                      const Matrix& k) {
  detail::require(st.has_state, "state_pi_regression: stacks carry no state data");
  const Index n = st.n, m = st.m;
  Regression reg;
  reg.sym_dim = n;
  reg.gain_rows = m;
  reg.gain_cols = n;
  reg.layout = "vecs(P_k), vec(K_{k+1})";
  const Matrix ktr = k.transpose() * r;
  reg.design = hcat(st.delta_x, -2.0 * detail::kron_identity_right(st.gamma_xx, n, ktr) +
                                    2.0 * detail::kron_identity_right(st.gamma_xu, n, r));
  reg.target = -st.gamma_xx * vec(q + k.transpose() * r * k);
  return reg;
}

/// [I_xx, -2 I_xu] [vecs H; vec K] = delta_x vecs(P).
inline Regression state_vi_regression(const DataStacks& st, const Matrix& p) {
  detail::require(st.has_state, "state_vi_regression: stacks carry no state data");
  Regression reg;
  reg.sym_dim = st.n;
  reg.gain_rows = st.m;
  reg.gain_cols = st.n;
  reg.layout = "vecs(H_k), vec(K_k)";
  reg.design = hcat(st.i_xx, -2.0 * st.i_xu);
  reg.target = st.delta_x * vecs(p);
  return reg;
}

/// Output counterpart of the state PI regression; y'Qy y replaces x'Qx.
inline Regression output_pi_original_regression(const DataStacks& st, const Matrix& qy,
                                                const Matrix& r, const Matrix& kbar) {
  detail::require(st.has_output, "output_pi_original_regression: stacks carry no output data");
  const Index nz = st.n_zeta, m = st.m;
  Regression reg;
  reg.sym_dim = nz;
  reg.gain_rows = m;
  reg.gain_cols = nz;
  reg.layout = "vecs(Pbar_k), vec(Kbar_{k+1})";
  const Matrix ktr = kbar.transpose() * r;
  reg.design =
      hcat(st.delta_zeta, -2.0 * detail::kron_identity_right(st.gamma_zeta_zeta, nz, ktr) +
                              2.0 * detail::kron_identity_right(st.gamma_zeta_u, nz, r));
  reg.target = -st.gamma_yy * vec(qy) - st.gamma_zeta_zeta * vec(kbar.transpose() * r * kbar);
  return reg;
}

/// [I_zz, -2 I_zu] [vecs Hbar; vec Kbar] = delta_zeta vecs(Pbar) + I_yy vecs(Qy).
inline Regression output_vi_original_regression(const DataStacks& st, const Matrix& qy,
                                                const Matrix& pbar) {
  detail::require(st.has_output, "output_vi_original_regression: stacks carry no output data");
  Regression reg;
  reg.sym_dim = st.n_zeta;
  reg.gain_rows = st.m;
  reg.gain_cols = st.n_zeta;
  reg.layout = "vecs(Hbar_k), vec(Kbar_k)";
  reg.design = hcat(st.i_zeta_zeta, -2.0 * st.i_zeta_u);
  reg.target = st.delta_zeta * vecs(pbar) + st.i_yy * vecs(qy);
  return reg;
}

/// (delta_zeta + 2 Gamma_zz (I (x) Kbar'B_zeta') N - 2 Gamma_zu (I (x) B_zeta') N) vecs(Pbar)
///   = -Gamma_yy vec(Qy) - Gamma_zz vec(Kbar'R Kbar).
inline Regression output_pi_improved_regression(const DataStacks& st, const Matrix& qy,
                                                const Matrix& r, const Matrix& b_zeta,
                                                const Matrix& kbar) {
  detail::require(st.has_output, "output_pi_improved_regression: stacks carry no output data");
  const Index nz = st.n_zeta;
  const Matrix dup = duplication_matrix(nz);
  const Matrix bt = b_zeta.transpose();
  Regression reg;
  reg.sym_dim = nz;
  reg.layout = "vecs(Pbar_k)";
  reg.design = st.delta_zeta +
               2.0 * detail::kron_identity_right(st.gamma_zeta_zeta, nz, kbar.transpose() * bt) * dup -
               2.0 * detail::kron_identity_right(st.gamma_zeta_u, nz, bt) * dup;
  reg.target = -st.gamma_yy * vec(qy) - st.gamma_zeta_zeta * vec(kbar.transpose() * r * kbar);
  return reg;
}

/// I_zz vecs(Hbar) = delta_zeta vecs(Pbar) + I_yy vecs(Qy) + 2 I_zu vec(Kbar),
/// Kbar = -R^{-1} B_zeta' Pbar.
inline Regression output_vi_improved_regression(const DataStacks& st, const Matrix& qy,
                                                const Matrix& pbar, const Matrix& kbar) {
  detail::require(st.has_output, "output_vi_improved_regression: stacks carry no output data");
  Regression reg;
  reg.sym_dim = st.n_zeta;
  reg.layout = "vecs(Hbar_k)";
  reg.design = st.i_zeta_zeta;
  reg.target = st.delta_zeta * vecs(pbar) + st.i_yy * vecs(qy) + 2.0 * st.i_zeta_u * vec(kbar);
  return reg;
}

/// Column counts of each regression family for given dimensions.
inline Index unknown_count(AdpAlgorithm a, Index dim, Index m) {
  switch (a) {
    case AdpAlgorithm::output_pi_improved:
    case AdpAlgorithm::output_vi_improved:
      return packed_size(dim);
    default:
      return packed_size(dim) + m * dim;
  }
}

// ---------------------------------------------------------------------------
// Policy iteration

namespace detail {

/// Shared PI loop. `step(K, k)` returns (P_k, K_{k+1}) and the design width.
template <class Step>
AdpResult run_pi(AdpAlgorithm alg, const DataStacks& st, const Matrix& k0,
                 const AdpOptions& opts, Step&& step) {
  AdpResult res;
  res.algorithm = alg;
  gate(st, alg, opts.rank_tol, res.rank);
  Matrix k = k0;
  for (int it = 0; it < opts.max_iters; ++it) {
    auto [p, k_next, width] = step(k, it);
    res.unknowns = width;
    IterateRecord rec;
    rec.k = it;
    rec.P = p;
    rec.K = k;
    if (!res.history.records.empty()) rec.step_norm = norm2(p - res.history.records.back().P);
    const bool diverged = !p.allFinite() || !k_next.allFinite() ||
                          norm2(p) > opts.divergence_cap || norm2(k_next) > opts.divergence_cap;
    const bool done = !res.history.records.empty() && rec.step_norm < opts.tol;
    res.history.records.push_back(std::move(rec));
    if (diverged) {
      res.history.status = "diverged";
      fill_errors(res);
      attach_reference(res, opts.reference);
      throw AdpDiverged(std::string(to_string(alg)) + ": iterate norm exceeded " +
                            std::to_string(opts.divergence_cap) + " at iteration " +
                            std::to_string(it) + " (is the initial gain stabilizing?)",
                        std::move(res));
    }
    k = k_next;
    if (done) {
      res.history.converged = true;
      res.history.status = "converged";
      break;
    }
  }
  if (!res.history.converged) res.history.status = "not converged";
  res.P = res.history.last().P;
  res.K = k;
  fill_errors(res);
  attach_reference(res, opts.reference);
  return res;
}

struct PiStep {
  Matrix p;
  Matrix k_next;
  Index width;
};

}  // namespace detail

inline AdpResult state_pi(const DataStacks& st, const Matrix& q, const Matrix& r,
                          const Matrix& k0, const AdpOptions& opts = {}) {
  detail::require(st.has_state, "state_pi: stacks carry no state data");
  detail::check_square(q, st.n, "state_pi: Q must be n x n");
  detail::check_square(r, st.m, "state_pi: R must be m x m");
  if (k0.rows() != st.m || k0.cols() != st.n) throw Error("state_pi: K0 must be m x n");
  const RankReport rep = rank_report(st, opts.rank_tol);
  return detail::run_pi(AdpAlgorithm::state_pi, st, k0, opts, [&](const Matrix& k, int it) {
    const Regression reg = state_pi_regression(st, q, r, k);
    const auto ls = detail::solve_checked(reg, opts.solver, rep,
                                          "state_pi", it);
    return detail::PiStep{detail::sym_part(reg, ls.solution), detail::gain_part(reg, ls.solution),
                          reg.design.cols()};
  });
}

inline AdpResult output_pi_original(const DataStacks& st, const Matrix& qy, const Matrix& r,
                                    const Matrix& kbar0, const AdpOptions& opts = {}) {
  detail::require(st.has_output, "output_pi_original: stacks carry no output data");
  detail::check_square(qy, st.p, "output_pi_original: Qy must be p x p");
  detail::check_square(r, st.m, "output_pi_original: R must be m x m");
  if (kbar0.rows() != st.m || kbar0.cols() != st.n_zeta)
    throw Error("output_pi_original: Kbar0 must be m x n_zeta");
  const RankReport rep = rank_report(st, opts.rank_tol);
  return detail::run_pi(
      AdpAlgorithm::output_pi_original, st, kbar0, opts, [&](const Matrix& k, int it) {
        const Regression reg = output_pi_original_regression(st, qy, r, k);
        const auto ls = detail::solve_checked(reg, opts.solver, rep,
                                              "output_pi_original", it);
        return detail::PiStep{detail::sym_part(reg, ls.solution),
                              detail::gain_part(reg, ls.solution), reg.design.cols()};
      });
}

inline AdpResult output_pi_improved(const DataStacks& st, const Matrix& qy, const Matrix& r,
                                    const Matrix& b_zeta, const Matrix& kbar0,
                                    const AdpOptions& opts = {}) {
  detail::require(st.has_output, "output_pi_improved: stacks carry no output data");
  detail::check_square(qy, st.p, "output_pi_improved: Qy must be p x p");
  detail::check_square(r, st.m, "output_pi_improved: R must be m x m");
  if (b_zeta.rows() != st.n_zeta || b_zeta.cols() != st.m)
    throw Error("output_pi_improved: B_zeta must be n_zeta x m");
  if (kbar0.rows() != st.m || kbar0.cols() != st.n_zeta)
    throw Error("output_pi_improved: Kbar0 must be m x n_zeta");
  const RankReport rep = rank_report(st, opts.rank_tol);
  const auto rldlt = r.ldlt();
  return detail::run_pi(
      AdpAlgorithm::output_pi_improved, st, kbar0, opts, [&](const Matrix& k, int it) {
        const Regression reg = output_pi_improved_regression(st, qy, r, b_zeta, k);
        const auto ls = detail::solve_checked(reg, opts.solver, rep,
                                              "output_pi_improved", it);
        const Matrix p = detail::sym_part(reg, ls.solution);
        const Matrix k_next = -rldlt.solve(b_zeta.transpose() * p);
        return detail::PiStep{p, k_next, reg.design.cols()};
      });
}

// ---------------------------------------------------------------------------
// Value iteration

namespace detail {

/// `solve(P, k)` returns (D, K_k): the Riccati increment and the gain paired
/// with P_k.
template <class Solve>
AdpResult run_vi(AdpAlgorithm alg, const DataStacks& st, const Matrix& p0,
                 const ViSchedule& sched, const AdpOptions& opts, Index width, Solve&& solve) {
  AdpResult res;
  res.algorithm = alg;
  res.unknowns = width;
  gate(st, alg, opts.rank_tol, res.rank);
  const Matrix p0s = symmetrize(p0);
  if (!in_bound_set(p0s, std::numeric_limits<double>::infinity(), sched.psd_tol))
    throw Error(std::string(to_string(alg)) + ": P0 must be positive semidefinite");
  Matrix last_gain;
  res.history = run_vi_loop(
      p0s, sched,
      [&](const Matrix& p, int k) {
        auto [d, gain] = solve(p, k);
        last_gain = std::move(gain);
        return d;
      },
      [&](IterateRecord& rec) { rec.K = last_gain; });
  res.P = res.history.last().P;
  res.K = res.history.last().K;
  fill_errors(res);
  attach_reference(res, opts.reference);
  return res;
}

struct ViStep {
  Matrix d;
  Matrix gain;
};

}  // namespace detail

inline AdpResult state_vi(const DataStacks& st, const Matrix& q, const Matrix& r,
                          const Matrix& p0, const ViSchedule& sched,
                          const AdpOptions& opts = {}) {
  detail::require(st.has_state, "state_vi: stacks carry no state data");
  detail::check_square(q, st.n, "state_vi: Q must be n x n");
  detail::check_square(r, st.m, "state_vi: R must be m x m");
  detail::check_square(p0, st.n, "state_vi: P0 must be n x n");
  const RankReport rep = rank_report(st, opts.rank_tol);
  return detail::run_vi(AdpAlgorithm::state_vi, st, p0, sched, opts,
                        unknown_count(AdpAlgorithm::state_vi, st.n, st.m),
                        [&](const Matrix& p, int k) {
                          const Regression reg = state_vi_regression(st, p);
                          const auto ls = detail::solve_checked(reg, opts.solver, rep, "state_vi", k);
                          const Matrix h = detail::sym_part(reg, ls.solution);
                          const Matrix kk = detail::gain_part(reg, ls.solution);
                          return detail::ViStep{h - kk.transpose() * r * kk + q, kk};
                        });
}

inline AdpResult output_vi_original(const DataStacks& st, const Matrix& qy, const Matrix& r,
                                    const Matrix& pbar0, const ViSchedule& sched,
                                    const AdpOptions& opts = {}) {
  detail::require(st.has_output, "output_vi_original: stacks carry no output data");
  detail::check_square(qy, st.p, "output_vi_original: Qy must be p x p");
  detail::check_square(r, st.m, "output_vi_original: R must be m x m");
  detail::check_square(pbar0, st.n_zeta, "output_vi_original: Pbar0 must be n_zeta x n_zeta");
  const RankReport rep = rank_report(st, opts.rank_tol);
  return detail::run_vi(AdpAlgorithm::output_vi_original, st, pbar0, sched, opts,
                        unknown_count(AdpAlgorithm::output_vi_original, st.n_zeta, st.m),
                        [&](const Matrix& p, int k) {
                          const Regression reg = output_vi_original_regression(st, qy, p);
                          const auto ls =
                              detail::solve_checked(reg, opts.solver, rep, "output_vi_original", k);
                          const Matrix h = detail::sym_part(reg, ls.solution);
                          const Matrix kk = detail::gain_part(reg, ls.solution);
                          return detail::ViStep{h - kk.transpose() * r * kk, kk};
                        });
}

inline AdpResult output_vi_improved(const DataStacks& st, const Matrix& qy, const Matrix& r,
                                    const Matrix& b_zeta, const Matrix& pbar0,
                                    const ViSchedule& sched, const AdpOptions& opts = {}) {
  detail::require(st.has_output, "output_vi_improved: stacks carry no output data");
  detail::check_square(qy, st.p, "output_vi_improved: Qy must be p x p");
  detail::check_square(r, st.m, "output_vi_improved: R must be m x m");
  detail::check_square(pbar0, st.n_zeta, "output_vi_improved: Pbar0 must be n_zeta x n_zeta");
  if (b_zeta.rows() != st.n_zeta || b_zeta.cols() != st.m)
    throw Error("output_vi_improved: B_zeta must be n_zeta x m");
  const RankReport rep = rank_report(st, opts.rank_tol);
  const auto rldlt = r.ldlt();
  const Matrix bt = b_zeta.transpose();
  // H-only design is fixed across iterations: factor it once
  const Matrix& design = st.i_zeta_zeta;
  if (design.rows() < design.cols())
    throw RankDeficientError("output_vi_improved: fewer data rows than unknowns", rep);
  Vector scale = Vector::Ones(design.cols());
  if (opts.solver.equilibrate)
    for (Index j = 0; j < design.cols(); ++j)
      if (const double cn = design.col(j).norm(); cn > 0.0) scale(j) = 1.0 / cn;
  Eigen::BDCSVD<Matrix> svd(design * scale.asDiagonal(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(opts.solver.rtol);
  if (svd.rank() < design.cols())
    throw RankDeficientError("output_vi_improved: design matrix rank " +
                                 std::to_string(svd.rank()) + " < " +
                                 std::to_string(design.cols()),
                             rep);
  return detail::run_vi(AdpAlgorithm::output_vi_improved, st, pbar0, sched, opts,
                        unknown_count(AdpAlgorithm::output_vi_improved, st.n_zeta, st.m),
                        [&](const Matrix& p, int) {
                          const Matrix kk = -rldlt.solve(bt * p);
                          const Regression reg = output_vi_improved_regression(st, qy, p, kk);
                          const Vector sol = scale.asDiagonal() * svd.solve(reg.target);
                          const Matrix h = unvecs(sol);
                          return detail::ViStep{h - p * b_zeta * rldlt.solve(bt * p), kk};
                        });
}

// ---------------------------------------------------------------------------
// Export

/// k, epoch, reset, step_norm, vecs(P)..., vec(K)..., p_error, k_error.
inline void write_iterates_csv(std::ostream& os, const AdpResult& res) {
  const auto& recs = res.history.records;
  const Index np = recs.empty() ? 0 : packed_size(recs.front().P.rows());
  Index nk = 0;
  for (const auto& r : recs) nk = std::max<Index>(nk, r.K.size());
  os << "k,epoch,reset,step_norm";
  for (Index i = 0; i < np; ++i) os << ",p" << (i + 1);
  for (Index i = 0; i < nk; ++i) os << ",k" << (i + 1);
  os << ",p_error,k_error\n" << std::setprecision(17);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& r = recs[i];
    os << r.k << ',' << r.epoch << ',' << (r.reset ? 1 : 0) << ',' << r.step_norm;
    const Vector pv = vecs(r.P);
    for (Index j = 0; j < np; ++j) os << ',' << pv(j);
    const Vector kv = r.K.size() ? vec(r.K) : Vector();
    for (Index j = 0; j < nk; ++j) {
      os << ',';
      if (j < kv.size()) os << kv(j);
    }
    os << ',' << (i < res.p_error.size() ? res.p_error[i] : std::numeric_limits<double>::quiet_NaN())
       << ',' << (i < res.k_error.size() ? res.k_error[i] : std::numeric_limits<double>::quiet_NaN())
       << '\n';
  }
}

}  // namespace oadp
