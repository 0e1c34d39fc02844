#pragma once

// Dense complex linear algebra shared by every module: Hilbert-Schmidt
// geometry, tensor/vectorization utilities, weighted partial traces, rank and
// positivity checks. The vectorization convention is column-stacking
// everywhere: vec(X)[i + j*rows] = X(i,j), so hs_inner(A,B) = vec(A)^dag vec(B)
// and the superoperator of X -> AXB is (B^T (x) A).

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "asymptotica/errors.hpp"
#include "asymptotica/tolerances.hpp"

namespace asymptotica {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

inline CMat cidentity(int d) { return CMat::Identity(d, d); }

inline CMat matrix_unit(int d, int i, int j) {
  CMat e = CMat::Zero(d, d);
  e(i, j) = 1.0;
  return e;
}

// tr(a^dag b)
inline Complex hs_inner(const CMat& a, const CMat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError("hs_inner: shape mismatch");
  return (a.adjoint() * b).trace();
}

inline double hs_norm(const CMat& a) { return a.norm(); }

// Largest singular value.
inline double op_norm(const CMat& a) {
  if (a.rows() == 0 || a.cols() == 0) return 0.0;
  Eigen::JacobiSVD<CMat> svd(a);
  return svd.singularValues()(0);
}

inline CMat hermitize(const CMat& a) { return 0.5 * (a + a.adjoint()); }

inline CVec vec(const CMat& m) {
  return Eigen::Map<const CVec>(m.data(), m.size());
}

inline CMat devec(const CVec& v, int rows, int cols) {
  if (v.size() != static_cast<Eigen::Index>(rows) * cols)
    throw DimensionError("devec: size mismatch");
  return Eigen::Map<const CMat>(v.data(), rows, cols);
}

inline CMat devec_square(const CVec& v) {
  const auto n = v.size();
  const int d = static_cast<int>(std::llround(std::sqrt(double(n))));
  if (Eigen::Index(d) * d != n) throw DimensionError("devec_square: not square");
  return devec(v, d, d);
}

// Kronecker product with row index i_a*rows_b + i_b.
inline CMat kron(const CMat& a, const CMat& b) {
  CMat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// tr_2(y), y acting on C^{d1} (x) C^{d2}.
inline CMat partial_trace_second(const CMat& y, int d1, int d2) {
  if (y.rows() != Eigen::Index(d1) * d2 || y.cols() != Eigen::Index(d1) * d2)
    throw DimensionError("partial_trace_second: bad dimensions");
  CMat out = CMat::Zero(d1, d1);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j)
      for (int a = 0; a < d2; ++a) out(i, j) += y(i * d2 + a, j * d2 + a);
  return out;
}

// tr_1(y), y acting on C^{d1} (x) C^{d2}.
inline CMat partial_trace_first(const CMat& y, int d1, int d2) {
  if (y.rows() != Eigen::Index(d1) * d2 || y.cols() != Eigen::Index(d1) * d2)
    throw DimensionError("partial_trace_first: bad dimensions");
  CMat out = CMat::Zero(d2, d2);
  for (int a = 0; a < d2; ++a)
    for (int b = 0; b < d2; ++b)
      for (int i = 0; i < d1; ++i) out(a, b) += y(i * d2 + a, i * d2 + b);
  return out;
}

// Hermitian within eps and min eigenvalue >= -eps * ||a||.
inline bool psd_check(const CMat& a, double eps) {
  if (a.rows() != a.cols()) throw DimensionError("psd_check: not square");
  if (a.rows() == 0) return true;
  const double scale = std::max(1.0, a.norm());
  if ((a - a.adjoint()).norm() > eps * scale) return false;
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(a),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -eps * scale;
}

// tr_2( y (I (x) rho2) ): the Hilbert-Schmidt adjoint of x -> x (x) rho2.
inline CMat partial_trace_weighted(const CMat& y, int d1, int d2,
                                   const CMat& rho2,
                                   const Tolerances& tol = {}) {
  if (y.rows() != Eigen::Index(d1) * d2 || y.cols() != Eigen::Index(d1) * d2)
    throw DimensionError("partial_trace_weighted: y has wrong dimensions");
  if (rho2.rows() != d2 || rho2.cols() != d2)
    throw DimensionError("partial_trace_weighted: rho2 has wrong dimensions");
  if (std::abs(rho2.trace() - Complex(1.0)) > 1e-6 ||
      !psd_check(rho2, std::max(tol.eps_eig, 1e-9)))
    throw ValidationError("partial_trace_weighted: rho2 is not a state");
  CMat out = CMat::Zero(d1, d1);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j) {
      Complex s = 0.0;
      for (int a = 0; a < d2; ++a)
        for (int c = 0; c < d2; ++c) s += y(i * d2 + a, j * d2 + c) * rho2(c, a);
      out(i, j) = s;
    }
  return out;
}

// Rotate the largest-magnitude entry to the positive real axis; makes
// SVD/eigenvector output deterministic up to machine precision.
inline void phase_canonicalize(Eigen::Ref<CVec> v) {
  Eigen::Index at = 0;
  double best = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > best + 1e-15) {
      best = a;
      at = i;
    }
  }
  if (best <= 0) return;
  v *= std::conj(v(at)) / best;
}

inline CMat phase_canonicalize_mat(CMat m) {
  Eigen::Map<CVec> v(m.data(), m.size());
  phase_canonicalize(v);
  return m;
}

// Numerical rank at a relative threshold.
inline int rank_svd(const CMat& m, double eps) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMat> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0) return 0;
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > eps * sv(0)) ++r;
  return r;
}

// Orthonormal basis of the column span, count = numerical rank at eps.
inline CMat orthonormal_cols(const CMat& m, double eps) {
  if (m.cols() == 0 || m.rows() == 0) return CMat(m.rows(), 0);
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) <= 0) return CMat(m.rows(), 0);
  int r = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > eps * sv(0)) ++r;
  CMat u = svd.matrixU().leftCols(r);
  for (int j = 0; j < r; ++j) phase_canonicalize(u.col(j));
  return u;
}

// Hilbert-Schmidt-orthonormal basis of span{vectors}.
inline std::vector<CMat> orthonormal_span(const std::vector<CMat>& vectors,
                                          double eps) {
  if (vectors.empty()) return {};
  const auto rows = vectors.front().rows();
  const auto cols = vectors.front().cols();
  CMat stacked(rows * cols, static_cast<Eigen::Index>(vectors.size()));
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    if (vectors[k].rows() != rows || vectors[k].cols() != cols)
      throw DimensionError("orthonormal_span: mixed shapes");
    stacked.col(static_cast<Eigen::Index>(k)) = vec(vectors[k]);
  }
  CMat u = orthonormal_cols(stacked, eps);
  std::vector<CMat> out;
  out.reserve(u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j)
    out.push_back(devec(u.col(j), static_cast<int>(rows), static_cast<int>(cols)));
  return out;
}

// Residual of x against an orthonormal column basis: || x - B B^dag x ||.
inline double span_residual_cols(const CVec& x, const CMat& basis) {
  if (basis.cols() == 0) return x.norm();
  return (x - basis * (basis.adjoint() * x)).norm();
}

inline double span_residual(const CMat& x, const CMat& basis) {
  return span_residual_cols(vec(x), basis);
}

// Stack matrices as columns (vectorized).
inline CMat stack_as_columns(const std::vector<CMat>& mats) {
  if (mats.empty()) return CMat(0, 0);
  CMat out(mats.front().size(), static_cast<Eigen::Index>(mats.size()));
  for (std::size_t k = 0; k < mats.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = vec(mats[k]);
  return out;
}

// Largest residual between spans of two orthonormal column bases.
inline double mutual_span_residual(const CMat& a, const CMat& b) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    worst = std::max(worst, span_residual_cols(a.col(j), b));
  for (Eigen::Index j = 0; j < b.cols(); ++j)
    worst = std::max(worst, span_residual_cols(b.col(j), a));
  return worst;
}

// Superoperator of X -> A X B.
inline CMat sandwich_superop(const CMat& a, const CMat& b) {
  return kron(b.transpose(), a);
}

// Hermitian square root / inverse square root on the support.
inline CMat sqrt_psd(const CMat& a, double support_eps = 0.0) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(a));
  RVec ev = es.eigenvalues();
  const double top = std::max(0.0, ev.maxCoeff());
  RVec s = ev;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s(i) = (ev(i) > support_eps * top) ? std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

inline CMat inv_sqrt_psd_on_support(const CMat& a, double support_eps) {
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(a));
  RVec ev = es.eigenvalues();
  const double top = std::max(0.0, ev.maxCoeff());
  RVec s = ev;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s(i) = (ev(i) > support_eps * top) ? 1.0 / std::sqrt(ev(i)) : 0.0;
  return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
}

// Nearest unitary (polar factor).
inline CMat polar_unitary(const CMat& m) {
  Eigen::JacobiSVD<CMat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

} // namespace asymptotica
