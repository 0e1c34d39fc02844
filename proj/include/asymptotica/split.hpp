#pragma once

// Recurrent/transient splitting H = H0 (+) H1. q0/q1 are orthogonal
// projectors in the original coordinates; basis_change is a unitary whose
// first h0_dim columns span H0, so conjugating by it puts H0 coordinates
// first.

#include <Eigen/Dense>

#include "asymptotica/errors.hpp"
#include "asymptotica/matrix.hpp"

namespace asymptotica {

struct HilbertSplit {
  int dim_total = 0;
  int h0_dim = 0;
  CMat q0;            // projector onto H0
  CMat q1;            // projector onto H1
  CMat basis_change;  // unitary, H0 basis first

  int h1_dim() const { return dim_total - h0_dim; }
  bool faithful() const { return h0_dim == dim_total; }

  void validate(const Tolerances& tol) const {
    const CMat id = cidentity(dim_total);
    if ((q0 + q1 - id).norm() > tol.eps_mat * dim_total ||
        (q0 * q1).norm() > tol.eps_mat * dim_total ||
        (q0 - q0.adjoint()).norm() > tol.eps_mat * dim_total ||
        (q0 * q0 - q0).norm() > tol.eps_mat * dim_total)
      throw StructuralError("HilbertSplit: projector identities violated");
    if ((basis_change.adjoint() * basis_change - id).norm() >
        tol.eps_mat * dim_total)
      throw StructuralError("HilbertSplit: basis change is not unitary");
  }

  // X in original coordinates -> adapted coordinates (H0 block first).
  CMat to_adapted(const CMat& x) const {
    return basis_change.adjoint() * x * basis_change;
  }
  CMat to_original(const CMat& x) const {
    return basis_change * x * basis_change.adjoint();
  }

  // Embed an H0-block operator as x (+) 0 in adapted coordinates.
  CMat embed_h0(const CMat& x) const {
    CMat out = CMat::Zero(dim_total, dim_total);
    out.topLeftCorner(h0_dim, h0_dim) = x;
    return out;
  }
  CMat embed_h1(const CMat& x) const {
    const int h1 = h1_dim();
    CMat out = CMat::Zero(dim_total, dim_total);
    out.bottomRightCorner(h1, h1) = x;
    return out;
  }
};

// Split from an explicit H0 projector (eigenvectors above a support cut are
// chosen by the caller).
inline HilbertSplit split_from_h0_basis(const CMat& h0_basis, int dim_total,
                                        double ortho_eps = 1e-12) {
  HilbertSplit s;
  s.dim_total = dim_total;
  s.h0_dim = static_cast<int>(h0_basis.cols());
  s.q0 = h0_basis * h0_basis.adjoint();
  s.q1 = cidentity(dim_total) - s.q0;
  CMat w(dim_total, dim_total);
  w.leftCols(s.h0_dim) = h0_basis;
  if (s.h0_dim < dim_total) {
    // Complete with an orthonormal basis of H1 = ker(q0).
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(s.q1));
    int col = s.h0_dim;
    for (Eigen::Index i = es.eigenvalues().size(); i-- > 0;) {
      if (es.eigenvalues()(i) > 0.5 && col < dim_total)
        w.col(col++) = es.eigenvectors().col(i);
    }
    if (col != dim_total)
      throw NumericalError("split_from_h0_basis: complement extraction failed");
  }
  // Polish to an exact unitary.
  (void)ortho_eps;
  s.basis_change = polar_unitary(w);
  return s;
}

} // namespace asymptotica
