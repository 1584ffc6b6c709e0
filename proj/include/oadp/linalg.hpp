#pragma once

// Dense kernels used by the vectorized regressions: symmetric packings,
// Kronecker products, the duplication matrix, Lyapunov solves, least squares
// and numerical rank.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace oadp {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Length of the packed upper triangle of an n x n symmetric matrix.
constexpr Index packed_size(Index n) { return n * (n + 1) / 2; }

/// Induced 2-norm (largest singular value).
inline double norm2(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1 || a.cols() == 1) return a.norm();
  return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

inline Vector singular_values(const Matrix& a) {
  if (a.size() == 0) return Vector();
  return Eigen::BDCSVD<Matrix>(a).singularValues();
}

/// Quadratic-monomial packing [b1^2, b1 b2, ..., b1 bn, b2^2, ..., bn^2].
inline Vector vecv(const Vector& b) {
  const Index n = b.size();
  if (n == 0) throw Error("vecv: empty vector");
  Vector out(packed_size(n));
  Index k = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) out(k++) = b(i) * b(j);
  return out;
}

/// Returns (P + P^T)/2. Asymmetry beyond `tol` relative to max(1, max|P_ij|)
/// is rejected.
inline Matrix symmetrize(const Matrix& p, double tol = 1e-8) {
  if (p.rows() != p.cols())
    throw Error("symmetrize: matrix is " + std::to_string(p.rows()) + "x" +
                std::to_string(p.cols()) + ", expected square");
  if (p.size() == 0) return p;
  const double scale = std::max(1.0, p.cwiseAbs().maxCoeff());
  const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= tol * scale))
    throw Error("symmetrize: asymmetry " + std::to_string(asym) +
                " exceeds tolerance");
  return 0.5 * (p + p.transpose());
}

/// [p11, 2 p12, ..., 2 p1n, p22, 2 p23, ..., pnn]; vecv(x).dot(vecs(P)) == x'Px.
inline Vector vecs(const Matrix& p_in) {
  const Matrix p = symmetrize(p_in);
  const Index n = p.rows();
  Vector out(packed_size(n));
  Index k = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) out(k++) = (i == j ? 1.0 : 2.0) * p(i, j);
  return out;
}

/// Dimension n such that packed_size(n) == len, or -1.
inline Index unpacked_dim(Index len) {
  const auto n = static_cast<Index>(
      std::llround((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0));
  return packed_size(n) == len ? n : -1;
}

inline Matrix unvecs(const Vector& v) {
  const Index n = unpacked_dim(v.size());
  if (n < 0)
    throw Error("unvecs: length " + std::to_string(v.size()) +
                " is not a triangular number");
  Matrix p(n, n);
  Index k = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) {
      const double val = (i == j) ? v(k) : 0.5 * v(k);
      p(i, j) = val;
      p(j, i) = val;
      ++k;
    }
  return p;
}

/// Column stacking.
inline Vector vec(const Matrix& a) {
  return Eigen::Map<const Vector>(a.data(), a.size());
}

inline Matrix unvec(const Vector& v, Index rows, Index cols) {
  if (v.size() != rows * cols) throw Error("unvec: size mismatch");
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Kronecker product of two vectors, index ia * nb + ib.
inline Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Index i = 0; i < a.size(); ++i)
    out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// N_n with N_n vecs(P) = vec(P) for every symmetric P.
inline Matrix duplication_matrix(Index n) {
  if (n < 1) throw Error("duplication_matrix: n must be positive");
  Matrix d = Matrix::Zero(n * n, packed_size(n));
  // packed index of (i, j), i <= j
  auto packed = [n](Index i, Index j) { return i * n - i * (i - 1) / 2 + (j - i); };
  for (Index col = 0; col < n; ++col)
    for (Index row = 0; row < n; ++row) {
      const Index lo = std::min(row, col), hi = std::max(row, col);
      d(col * n + row, packed(lo, hi)) = (row == col) ? 1.0 : 0.5;
    }
  return d;
}

/// Solves F'X + XF + W = 0 by Kronecker vectorization. The LU solve alone
/// leaves a forward error of cond * eps, which on poorly damped closed loops
/// is large enough to break the monotonicity of policy iteration at the
/// 1e-8 level. Two refinement steps with the residual accumulated in long
/// double bring it back to a few ulps of ||X||.
inline Matrix solve_lyapunov(const Matrix& f, const Matrix& w, int refinement_steps = 2) {
  const Index n = f.rows();
  if (f.cols() != n || w.rows() != n || w.cols() != n)
    throw Error("solve_lyapunov: dimension mismatch");
  const Matrix wsym = symmetrize(w);
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix ft = f.transpose();
  const Matrix op = kron(eye, ft) + kron(ft, eye);
  Eigen::PartialPivLU<Matrix> lu(op);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14))
    throw Error("solve_lyapunov: spectrum conflict (F and -F' share an eigenvalue)");
  Matrix sol = unvec(lu.solve(-vec(wsym)), n, n);
  using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MatrixL fl = f.cast<long double>();
  const MatrixL wl = wsym.cast<long double>();
  for (int step = 0; step < refinement_steps; ++step) {
    const MatrixL xl = sol.cast<long double>();
    const Matrix r = (-(fl.transpose() * xl + xl * fl + wl)).cast<double>();
    sol += unvec(lu.solve(vec(r)), n, n);
  }
  sol = (0.5 * (sol + sol.transpose())).eval();
  return sol;
}

struct LeastSquaresOptions {
  double rtol = 1e-9;
  // Scale columns to unit norm before the rank-revealing factorization.
  bool equilibrate = true;
};

struct LeastSquaresResult {
  Vector solution;
  double residual_norm = 0.0;
  Index rank = 0;
  Vector singular_values;  // of the (possibly equilibrated) design
};

/// Minimum-norm least squares via SVD; singular values below rtol * sigma_max
/// are treated as zero and reported through `rank`.
inline LeastSquaresResult least_squares(const Matrix& a, const Vector& b,
                                        const LeastSquaresOptions& opts = {}) {
  if (a.rows() < 1) throw Error("least_squares: empty design");
  if (b.size() != a.rows()) throw Error("least_squares: rhs size mismatch");
  Vector scale = Vector::Ones(a.cols());
  if (opts.equilibrate) {
    for (Index j = 0; j < a.cols(); ++j) {
      const double cn = a.col(j).norm();
      if (cn > 0.0) scale(j) = 1.0 / cn;
    }
  }
  const Matrix scaled = a * scale.asDiagonal();
  Eigen::BDCSVD<Matrix> svd(scaled, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(opts.rtol);
  LeastSquaresResult out;
  out.singular_values = svd.singularValues();
  out.rank = svd.rank();
  out.solution = scale.asDiagonal() * svd.solve(b);
  out.residual_norm = (a * out.solution - b).norm();
  return out;
}

/// Count of singular values above tol * sigma_max.
inline Index numerical_rank(const Matrix& a, double tol = 1e-9) {
  const Vector sv = singular_values(a);
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  return (sv.array() > tol * sv(0)).count();
}

inline Matrix blockdiag(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

inline bool all_finite(const Matrix& a) { return a.allFinite(); }

}  // namespace oadp
