#pragma once

// State parameterization: observer polynomial and gain, the companion pair
// driving the compensator, the parameterization matrix M (x ~ M zeta) and the
// ancillary system zeta' = A_zeta zeta + B_zeta u.

#include <Eigen/Eigenvalues>

#include <complex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oadp/linalg.hpp"
#include "oadp/riccati.hpp"

namespace oadp {

struct LtiPlant {
  Matrix A, B, C;

  Index n() const { return A.rows(); }
  Index m() const { return B.cols(); }
  Index p() const { return C.rows(); }

  void validate() const {
    if (A.rows() != A.cols()) throw Error("LtiPlant: A must be square");
    if (B.rows() != n()) throw Error("LtiPlant: B must have n rows");
    if (C.cols() != n()) throw Error("LtiPlant: C must have n columns");
    if (n() < 1 || m() < 1 || p() < 1) throw Error("LtiPlant: empty dimension");
    if (!A.allFinite() || !B.allFinite() || !C.allFinite())
      throw Error("LtiPlant: non-finite entry");
  }
};

/// Monic s^n + a_{n-1} s^{n-1} + ... + a_0, stored as (a_0, ..., a_{n-1}).
class ObserverPoly {
 public:
  ObserverPoly() = default;

  static ObserverPoly from_coefficients(Vector alpha) {
    if (alpha.size() < 1) throw Error("ObserverPoly: degree must be at least 1");
    if (!alpha.allFinite()) throw Error("ObserverPoly: non-finite coefficient");
    ObserverPoly p;
    p.alpha_ = std::move(alpha);
    return p;
  }

  static ObserverPoly from_roots(std::span<const double> roots) {
    if (roots.empty()) throw Error("ObserverPoly: no roots given");
    // c holds coefficients in ascending powers, leading 1 implicit at the end
    std::vector<double> c{1.0};
    for (double r : roots) {
      std::vector<double> next(c.size() + 1, 0.0);
      for (std::size_t i = 0; i < c.size(); ++i) {
        next[i + 1] += c[i];
        next[i] -= r * c[i];
      }
      c = std::move(next);
    }
    Vector alpha(static_cast<Index>(roots.size()));
    for (Index i = 0; i < alpha.size(); ++i) alpha(i) = c[static_cast<std::size_t>(i)];
    return from_coefficients(alpha);
  }

  Index degree() const { return alpha_.size(); }
  const Vector& coefficients() const { return alpha_; }

  Eigen::VectorXcd roots() const;
  bool is_hurwitz() const;

  /// Lambda(X) by Horner's rule.
  Matrix evaluate(const Matrix& x) const {
    const Index n = x.rows();
    Matrix acc = Matrix::Identity(n, n);
    for (Index i = degree() - 1; i >= 0; --i)
      acc = x * acc + alpha_(i) * Matrix::Identity(n, n);
    return acc;
  }

 private:
  Vector alpha_;
};

struct CompanionPair {
  Matrix A_cal;
  Vector b;
  bool hurwitz = true;
};

inline CompanionPair companion_from_poly(const ObserverPoly& poly) {
  const Index n = poly.degree();
  if (n < 1) throw Error("companion_from_poly: empty polynomial");
  CompanionPair out;
  out.A_cal = Matrix::Zero(n, n);
  if (n > 1) out.A_cal.topRightCorner(n - 1, n - 1).setIdentity();
  out.A_cal.row(n - 1) = -poly.coefficients().transpose();
  out.b = Vector::Zero(n);
  out.b(n - 1) = 1.0;
  out.hurwitz = spectral_abscissa(out.A_cal) < 0.0;
  return out;
}

inline Eigen::VectorXcd ObserverPoly::roots() const {
  Eigen::EigenSolver<Matrix> es(companion_from_poly(*this).A_cal, false);
  return es.eigenvalues();
}

inline bool ObserverPoly::is_hurwitz() const {
  return roots().real().maxCoeff() < 0.0;
}

/// Characteristic polynomial coefficients (a_0..a_{n-1}) from the spectrum.
inline Vector characteristic_coefficients(const Matrix& f) {
  const Index n = f.rows();
  Eigen::EigenSolver<Matrix> es(f, false);
  if (es.info() != Eigen::Success) throw Error("characteristic_coefficients: eigen failure");
  std::vector<std::complex<double>> c{1.0};
  for (Index k = 0; k < n; ++k) {
    const std::complex<double> r = es.eigenvalues()(k);
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c = std::move(next);
  }
  Vector alpha(n);
  for (Index i = 0; i < n; ++i) alpha(i) = c[static_cast<std::size_t>(i)].real();
  return alpha;
}

/// Observability matrix [C; CA; ...; CA^{n-1}].
inline Matrix observability_matrix(const Matrix& a, const Matrix& c) {
  const Index n = a.rows();
  Matrix o(c.rows() * n, n);
  Matrix blk = c;
  for (Index i = 0; i < n; ++i) {
    o.middleRows(i * c.rows(), c.rows()) = blk;
    blk = blk * a;
  }
  return o;
}

inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
  return observability_matrix(a.transpose(), b.transpose()).transpose();
}

/// Single-output Ackermann placement: det(sI - A + LC) = Lambda(s).
inline Matrix place_observer_gain(const Matrix& a, const Matrix& c, const ObserverPoly& poly) {
  const Index n = a.rows();
  if (c.rows() != 1) throw Error("place_observer_gain: p > 1, supply L explicitly");
  if (poly.degree() != n) throw Error("place_observer_gain: polynomial degree must equal n");
  const Matrix obs = observability_matrix(a, c);
  if (numerical_rank(obs, 1e-12) < n) throw Error("place_observer_gain: (A, C) not observable");
  Vector en = Vector::Zero(n);
  en(n - 1) = 1.0;
  return poly.evaluate(a) * obs.fullPivLu().solve(en);
}

/// D_{n-1} = I, D_{i-1} = (A - LC) D_i + a_i I; returns D_0..D_{n-1}.
inline std::vector<Matrix> resolvent_coefficients(const Matrix& f, const ObserverPoly& poly) {
  const Index n = f.rows();
  std::vector<Matrix> d(static_cast<std::size_t>(n));
  d[static_cast<std::size_t>(n - 1)] = Matrix::Identity(n, n);
  for (Index i = n - 1; i >= 1; --i)
    d[static_cast<std::size_t>(i - 1)] =
        f * d[static_cast<std::size_t>(i)] + poly.coefficients()(i) * Matrix::Identity(n, n);
  return d;
}

/// ||(A - LC) D_0 + a_0 I||, zero exactly when Lambda is the observer polynomial.
inline double recursion_residual(const Matrix& f, const ObserverPoly& poly) {
  const auto d = resolvent_coefficients(f, poly);
  const Index n = f.rows();
  return norm2(f * d.front() + poly.coefficients()(0) * Matrix::Identity(n, n));
}

/// One block M_i = [D_0 f, ..., D_{n-1} f]. Its columns c_j obey
///   c_{n-1} = f,  c_{j-1} = F c_j + a_j f,  F c_0 + a_0 f = 0,
/// which is M_i A_cal = F M_i with the last column pinned. Running the
/// recursion forward pushes every rounding error through F again at each
/// step, and the Cayley-Hamilton row at the end collects all of it; on badly
/// conditioned pairs that leaves the identity residual orders of magnitude
/// above ||F|| ||M|| eps and M itself inaccurate. Solving all n equations at
/// once by Householder least squares keeps both at the rounding floor. The
/// system has full column rank (the first n - 1 equations are triangular in
/// c_0..c_{n-2}), so in exact arithmetic this is the same M.
inline Matrix build_M_block(const Matrix& f, const ObserverPoly& poly, const Vector& fi) {
  const Index n = f.rows();
  const Vector& a = poly.coefficients();
  Matrix block(n, n);
  block.col(n - 1) = fi;
  if (n == 1) return block;
  // equation j (rows j n .. j n + n - 1): c_{j-1} - F c_j = a_j f
  Matrix sys = Matrix::Zero(n * n, n * (n - 1));
  Vector rhs(n * n);
  for (Index j = 0; j < n; ++j) {
    rhs.segment(j * n, n) = a(j) * fi;
    if (j >= 1) sys.block(j * n, (j - 1) * n, n, n).setIdentity();
    if (j < n - 1)
      sys.block(j * n, j * n, n, n) = -f;
    else
      rhs.segment(j * n, n) += f * fi;
  }
  const Vector x = sys.colPivHouseholderQr().solve(rhs);
  for (Index j = 0; j < n - 1; ++j) block.col(j) = x.segment(j * n, n);
  return block;
}

/// M = [M_1, ..., M_{m+p}], M_i = [D_0 f_i, ..., D_{n-1} f_i] with f_i the
/// columns of [B L].
inline Matrix build_M(const Matrix& a, const Matrix& b, const Matrix& c, const Matrix& l,
                      const ObserverPoly& poly, bool check = true) {
  const Index n = a.rows(), m = b.cols(), p = c.rows();
  if (l.rows() != n || l.cols() != p) throw Error("build_M: L must be n x p");
  if (poly.degree() != n) throw Error("build_M: polynomial degree must equal n");
  const Matrix f = a - l * c;
  if (check) {
    const auto d = resolvent_coefficients(f, poly);
    const double res = norm2(f * d.front() + poly.coefficients()(0) * Matrix::Identity(n, n));
    const double scale = 1.0 + std::abs(poly.coefficients()(0)) + norm2(f) * norm2(d.front());
    if (!(res <= 1e-8 * scale)) throw Error("build_M: polynomial/gain mismatch");
  }
  Matrix bl(n, m + p);
  bl << b, l;
  Matrix mm(n, (m + p) * n);
  for (Index i = 0; i < m + p; ++i) mm.middleCols(i * n, n) = build_M_block(f, poly, bl.col(i));
  return mm;
}

/// [I_m (x) b; 0] and [0; I_p (x) b].
inline Matrix input_injection(Index n, Index m, Index p) {
  Vector b = Vector::Zero(n);
  b(n - 1) = 1.0;
  Matrix out = Matrix::Zero((m + p) * n, m);
  out.topRows(m * n) = kron(Matrix::Identity(m, m), Matrix(b));
  return out;
}

inline Matrix output_injection(Index n, Index m, Index p) {
  Vector b = Vector::Zero(n);
  b(n - 1) = 1.0;
  Matrix out = Matrix::Zero((m + p) * n, p);
  out.bottomRows(p * n) = kron(Matrix::Identity(p, p), Matrix(b));
  return out;
}

/// PBH test: rank [lambda I - A, B] = n for every eigenvalue with Re >= 0.
inline bool is_stabilizable(const Matrix& a, const Matrix& b, double tol = 1e-9) {
  const Index n = a.rows();
  Eigen::EigenSolver<Matrix> es(a, false);
  for (Index k = 0; k < n; ++k) {
    const std::complex<double> lam = es.eigenvalues()(k);
    if (lam.real() < -1e-9) continue;
    Eigen::MatrixXcd pbh(n, n + b.cols());
    pbh << lam * Eigen::MatrixXcd::Identity(n, n) - a.cast<std::complex<double>>(),
        b.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    const double smax = std::max(1.0, svd.singularValues()(0));
    if (svd.singularValues()(n - 1) <= tol * smax) return false;
  }
  return true;
}

inline bool is_detectable(const Matrix& a, const Matrix& c, double tol = 1e-9) {
  return is_stabilizable(a.transpose(), c.transpose(), tol);
}

inline bool is_controllable(const Matrix& a, const Matrix& b) {
  return numerical_rank(controllability_matrix(a, b), 1e-10) == a.rows();
}

inline Matrix psd_sqrt(const Matrix& q) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(q));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         es.eigenvectors().transpose();
}

struct Parameterization {
  Index n = 0, m = 0, p = 0, n_zeta = 0;
  ObserverPoly poly;
  Matrix L;
  Matrix A_cal;
  Vector b;
  Matrix M;                 // ground truth only; data-driven code never reads it
  Matrix compensator_A;     // I_{m+p} (x) A_cal
  Matrix output_injection;  // [0; I_p (x) b]
  Matrix A_zeta, B_zeta, Q_zeta;
  bool ancillary_stabilizable = false;
  bool ancillary_detectable = false;
  std::vector<std::string> warnings;
};

struct Ancillary {
  Matrix A_zeta, B_zeta, Q_zeta;
  bool stabilizable = false;
  bool detectable = false;
};

/// A_zeta = I (x) A_cal + [0; I_p (x) b] C M, B_zeta = [I_m (x) b; 0],
/// Q_zeta = M' C' Qy C M.
inline Ancillary build_ancillary(const Matrix& a_cal, Index m, Index p, const Matrix& c,
                                 const Matrix& mm, const Matrix& qy) {
  const Index n = a_cal.rows();
  Ancillary out;
  out.A_zeta = kron(Matrix::Identity(m + p, m + p), a_cal) + output_injection(n, m, p) * c * mm;
  out.B_zeta = input_injection(n, m, p);
  const Matrix cm = c * mm;
  out.Q_zeta = symmetrize(cm.transpose() * qy * cm);
  out.stabilizable = is_stabilizable(out.A_zeta, out.B_zeta);
  out.detectable = is_detectable(out.A_zeta, psd_sqrt(qy) * cm);
  return out;
}

/// Full construction. If `l` is empty the gain is placed by Ackermann (p = 1).
inline Parameterization make_parameterization(const LtiPlant& plant, const Matrix& qy,
                                              const ObserverPoly& poly,
                                              const std::optional<Matrix>& l = std::nullopt,
                                              bool strict = true) {
  plant.validate();
  Parameterization out;
  out.n = plant.n();
  out.m = plant.m();
  out.p = plant.p();
  out.n_zeta = (out.m + out.p) * out.n;
  out.poly = poly;
  if (poly.degree() != out.n) throw Error("observer polynomial degree must equal n");
  const CompanionPair comp = companion_from_poly(poly);
  if (!comp.hurwitz) out.warnings.push_back("observer polynomial is not Hurwitz");
  out.A_cal = comp.A_cal;
  out.b = comp.b;
  out.L = l ? *l : place_observer_gain(plant.A, plant.C, poly);
  out.M = build_M(plant.A, plant.B, plant.C, out.L, poly, strict);
  out.compensator_A = kron(Matrix::Identity(out.m + out.p, out.m + out.p), out.A_cal);
  out.output_injection = output_injection(out.n, out.m, out.p);
  const Ancillary anc = build_ancillary(out.A_cal, out.m, out.p, plant.C, out.M, qy);
  out.A_zeta = anc.A_zeta;
  out.B_zeta = anc.B_zeta;
  out.Q_zeta = anc.Q_zeta;
  out.ancillary_stabilizable = anc.stabilizable;
  out.ancillary_detectable = anc.detectable;
  if (!anc.stabilizable) out.warnings.push_back("(A_zeta, B_zeta) failed the stabilizability test");
  if (!anc.detectable) out.warnings.push_back("(A_zeta, sqrt(Qy) C M) failed the detectability test");
  return out;
}

struct IdentityResiduals {
  double companion = 0.0;  // ||M (I (x) A_cal) - (A - LC) M||
  double input = 0.0;      // ||M [I_m (x) b; 0] - B||
  double output = 0.0;     // ||M [0; I_p (x) b] - L||

  double max() const { return std::max({companion, input, output}); }
  bool ok(double tol = 1e-8) const { return max() <= tol; }
};

inline IdentityResiduals check_parameterization_identities(const LtiPlant& plant, const Matrix& l,
                                                           const Parameterization& par) {
  const Index n = plant.n(), m = plant.m(), p = plant.p();
  IdentityResiduals r;
  r.companion = norm2(par.M * kron(Matrix::Identity(m + p, m + p), par.A_cal) -
                      (plant.A - l * plant.C) * par.M);
  r.input = norm2(par.M * input_injection(n, m, p) - plant.B);
  r.output = norm2(par.M * output_injection(n, m, p) - l);
  return r;
}

inline bool has_full_row_rank(const Matrix& mm, double tol = 1e-9) {
  return numerical_rank(mm, tol) == mm.rows();
}

}  // namespace oadp
