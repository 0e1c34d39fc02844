#pragma once

// Quantum channels as linear maps on B(H) with cached representations.
// Conventions, fixed for the whole codebase:
//   * vectorization is column-stacking (see matrix.hpp);
//   * a stored Kraus list always describes the Schrodinger action
//     rho -> sum K rho K^dag, whatever picture the Channel itself is in;
//   * superop is the matrix of the map in the Channel's own picture, so the
//     Heisenberg superoperator is the conjugate transpose of the Schrodinger
//     one (the Hilbert-Schmidt adjoint);
//   * choi is the reshuffle of the stored superop:
//     choi[i*d+k, j*d+l] = superop[k+l*d, i+j*d]; the map is CP iff this is
//     PSD, in either picture.

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "asymptotica/eig.hpp"
#include "asymptotica/matrix.hpp"
#include "asymptotica/rng.hpp"
#include "asymptotica/split.hpp"

namespace asymptotica {

enum class Picture { Schrodinger, Heisenberg };

inline const char* picture_name(Picture p) {
  return p == Picture::Schrodinger ? "schrodinger" : "heisenberg";
}

struct ChannelFlags {
  bool unital = false;
  bool trace_preserving = false;
  bool cp = false;
  bool schwarz_unfalsified = false;
  double tol_mat = 0.0;  // tolerance used for unital/TP
  double tol_eig = 0.0;  // tolerance used for CP / Schwarz
};

inline CMat reshuffle_superop_to_choi(const CMat& superop, int d) {
  CMat choi(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          choi(i * d + k, j * d + l) = superop(k + l * d, i + j * d);
  return choi;
}

inline CMat reshuffle_choi_to_superop(const CMat& choi, int d) {
  CMat superop(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l)
          superop(k + l * d, i + j * d) = choi(i * d + k, j * d + l);
  return superop;
}

// Superoperator of the Schrodinger action rho -> sum K rho K^dag.
inline CMat superop_from_kraus_schrodinger(const std::vector<CMat>& ops) {
  const int d = static_cast<int>(ops.front().rows());
  CMat s = CMat::Zero(d * d, d * d);
  for (const auto& k : ops) s += kron(k.conjugate(), k);
  return s;
}

class Channel {
 public:
  static Channel from_superop(CMat superop, Picture picture,
                              const Tolerances& tol = {}) {
    Channel c;
    const int d2 = static_cast<int>(superop.rows());
    const int d = static_cast<int>(std::llround(std::sqrt(double(d2))));
    if (superop.rows() != superop.cols() || d * d != d2)
      throw DimensionError("Channel: superoperator must be d^2 x d^2");
    c.dim_ = d;
    c.picture_ = picture;
    c.superop_ = std::move(superop);
    c.choi_ = reshuffle_superop_to_choi(c.superop_, d);
    c.compute_flags(tol);
    return c;
  }

  // ops: Schrodinger-action Kraus operators; picture: the picture of the
  // channel being built (Heisenberg action is X -> sum K^dag X K).
  static Channel from_kraus(const std::vector<CMat>& ops, Picture picture,
                            const Tolerances& tol = {}) {
    if (ops.empty()) throw ValidationError("from_kraus: empty Kraus list");
    const auto d = ops.front().rows();
    for (const auto& k : ops)
      if (k.rows() != d || k.cols() != d)
        throw DimensionError("from_kraus: inconsistent Kraus dimensions");
    CMat s = superop_from_kraus_schrodinger(ops);
    if (picture == Picture::Heisenberg) s = s.adjoint().eval();
    Channel c = from_superop(std::move(s), picture, tol);
    c.kraus_ = ops;
    return c;
  }

  static Channel from_choi(const CMat& choi, Picture picture,
                           const Tolerances& tol = {}) {
    const int d2 = static_cast<int>(choi.rows());
    const int d = static_cast<int>(std::llround(std::sqrt(double(d2))));
    if (choi.rows() != choi.cols() || d * d != d2)
      throw DimensionError("Channel: Choi matrix must be d^2 x d^2");
    return from_superop(reshuffle_choi_to_superop(choi, d), picture, tol);
  }

  int dim() const { return dim_; }
  Picture picture() const { return picture_; }
  const CMat& superop() const { return superop_; }
  const CMat& choi() const { return choi_; }
  const ChannelFlags& flags() const { return flags_; }
  const std::optional<std::vector<CMat>>& kraus() const { return kraus_; }

  CMat apply(const CMat& x) const {
    if (x.rows() != dim_ || x.cols() != dim_)
      throw DimensionError("apply: operand has wrong dimension");
    return devec(superop_ * vec(x), dim_, dim_);
  }

  Channel adjoint() const {
    Channel c;
    c.dim_ = dim_;
    c.picture_ = picture_ == Picture::Schrodinger ? Picture::Heisenberg
                                                  : Picture::Schrodinger;
    c.superop_ = superop_.adjoint();
    c.choi_ = reshuffle_superop_to_choi(c.superop_, dim_);
    c.kraus_ = kraus_;
    c.compute_flags(tol_);
    return c;
  }

  // Kraus operators recovered from the Schrodinger-picture Choi matrix,
  // keeping eigenpairs above eps_eig * tr(choi).
  std::vector<CMat> kraus_from_choi() const {
    CMat choi_schr =
        picture_ == Picture::Schrodinger
            ? choi_
            : reshuffle_superop_to_choi(superop_.adjoint(), dim_);
    Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(choi_schr));
    std::vector<CMat> ops;
    const double cut = tol_.eps_eig * std::abs(choi_schr.trace());
    for (Eigen::Index a = es.eigenvalues().size(); a-- > 0;) {
      const double mu = es.eigenvalues()(a);
      if (mu <= cut) break;
      CVec v = es.eigenvectors().col(a);
      CMat k(dim_, dim_);
      for (int i = 0; i < dim_; ++i)
        for (int l = 0; l < dim_; ++l) k(l, i) = v(i * dim_ + l);
      ops.push_back(std::sqrt(mu) * k);
    }
    return ops;
  }

  const Tolerances& tolerances() const { return tol_; }

 private:
  void compute_flags(const Tolerances& tol) {
    tol_ = tol;
    const CVec id = vec(cidentity(dim_));
    flags_.unital = (superop_ * id - id).norm() <= tol.eps_mat * dim_;
    flags_.trace_preserving =
        (superop_.adjoint() * id - id).norm() <= tol.eps_mat * dim_;
    flags_.cp = psd_check(choi_, tol.eps_eig);
    // CP implies the operator Schwarz inequality; non-CP maps start
    // unfalsified and may be downgraded by schwarz_falsify.
    flags_.schwarz_unfalsified = true;
    flags_.tol_mat = tol.eps_mat;
    flags_.tol_eig = tol.eps_eig;
  }

  int dim_ = 0;
  Picture picture_ = Picture::Schrodinger;
  CMat superop_;
  CMat choi_;
  std::optional<std::vector<CMat>> kraus_;
  ChannelFlags flags_;
  Tolerances tol_;
};

inline Channel adjoint_channel(const Channel& c) { return c.adjoint(); }

inline CMat apply(const Channel& c, const CMat& x) { return c.apply(x); }

inline Channel compose(const Channel& a, const Channel& b) {
  if (a.dim() != b.dim())
    throw DimensionError("compose: dimension mismatch");
  if (a.picture() != b.picture())
    throw ValidationError("compose: picture mismatch");
  return Channel::from_superop(a.superop() * b.superop(), a.picture(),
                               a.tolerances());
}

inline Channel power(const Channel& c, unsigned long long n) {
  CMat acc = cidentity(c.dim() * c.dim());
  CMat base = c.superop();
  while (n > 0) {
    if (n & 1ull) acc = acc * base;
    base = base * base;
    n >>= 1;
  }
  return Channel::from_superop(std::move(acc), c.picture(), c.tolerances());
}

inline ChannelFlags check_properties(const Channel& c) { return c.flags(); }

// ---------------------------------------------------------------------------
// Operator Schwarz inequality falsifier: Phi(X^dag X) >= Phi(X)^dag Phi(X).
// Sampling only; a pass is evidence, not a certificate. CP channels must
// always pass.

struct FalsificationReport {
  bool passed = true;
  double worst_margin = 0.0;  // min eigenvalue of the defect, >= -eps means ok
  CMat worst_witness;
  int trials = 0;
};

inline double schwarz_defect(const Channel& c, const CMat& x) {
  const CMat lhs = c.apply((x.adjoint() * x).eval());
  const CMat fx = c.apply(x);
  Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(lhs - fx.adjoint() * fx),
                                         Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline FalsificationReport schwarz_falsify(const Channel& c, int trials,
                                           std::uint64_t seed) {
  if (!c.flags().unital)
    throw ValidationError("schwarz_falsify: channel must be unital");
  Rng rng(seed);
  FalsificationReport rep;
  rep.trials = trials;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  const int d = c.dim();
  auto consider = [&](const CMat& x) {
    const CMat xn = x / std::max(x.norm(), 1e-300);
    const double margin = schwarz_defect(c, xn);
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_witness = xn;
    }
  };
  for (int t = 0; t < trials; ++t) consider(rng.ginibre(d, d));
  // Eigenvector-directed refinement around the worst sample.
  if (rep.worst_witness.size() > 0) {
    CMat x = rep.worst_witness;
    double step = 0.5;
    for (int it = 0; it < 24; ++it) {
      const CMat cand = x + step * rng.ginibre(d, d);
      const CMat cn = cand / cand.norm();
      if (schwarz_defect(c, cn) < schwarz_defect(c, x)) {
        x = cn;
        consider(cn);
      } else {
        step *= 0.7;
      }
    }
  }
  rep.passed = rep.worst_margin >= -c.tolerances().eps_eig;
  return rep;
}

// ---------------------------------------------------------------------------
// Block decomposition of a Heisenberg unital map against a split H0 (+) H1,
// all in adapted coordinates (H0 first):
//   Phi(X00 (+) 0)  = [ phi00(X00)  phi01(X00) ; phi10(X00)  phi11(X00) ]
//   Phi(0 (+) Y11)  = [ 0           0          ; 0           psi11(Y11) ]
// The psi off-diagonal blocks vanish for positive unital maps, and
// phi01(I0) = phi10(I0) = 0, phi11(I0) + psi11(I1) = I1.

struct BlockMaps {
  int h0_dim = 0;
  int h1_dim = 0;
  CMat phi00;  // r^2   x r^2
  CMat phi01;  // r*h1  x r^2   (top-right block, vectorized)
  CMat phi10;  // h1*r  x r^2   (bottom-left block, vectorized)
  CMat phi11;  // h1^2  x r^2
  CMat psi11;  // h1^2  x h1^2
};

inline BlockMaps block_maps(const Channel& c, const HilbertSplit& split) {
  if (!c.flags().unital || c.picture() != Picture::Heisenberg)
    throw ValidationError("block_maps: channel must be Heisenberg unital");
  if (split.dim_total != c.dim())
    throw DimensionError("block_maps: split dimension mismatch");
  const int r = split.h0_dim;
  const int h1 = split.h1_dim();
  BlockMaps bm;
  bm.h0_dim = r;
  bm.h1_dim = h1;
  bm.phi00 = CMat::Zero(r * r, r * r);
  bm.phi01 = CMat::Zero(r * h1, r * r);
  bm.phi10 = CMat::Zero(h1 * r, r * r);
  bm.phi11 = CMat::Zero(h1 * h1, r * r);
  bm.psi11 = CMat::Zero(h1 * h1, h1 * h1);

  auto apply_adapted = [&](const CMat& x_adapted) {
    return split.to_adapted(c.apply(split.to_original(x_adapted)));
  };

  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) {
      const CMat y = apply_adapted(split.embed_h0(matrix_unit(r, i, j)));
      const int col = i + j * r;
      bm.phi00.col(col) = vec(CMat(y.topLeftCorner(r, r)));
      if (h1 > 0) {
        bm.phi01.col(col) = vec(CMat(y.topRightCorner(r, h1)));
        bm.phi10.col(col) = vec(CMat(y.bottomLeftCorner(h1, r)));
        bm.phi11.col(col) = vec(CMat(y.bottomRightCorner(h1, h1)));
      }
    }

  const double scale = std::max(1.0, c.superop().norm());
  const double eps = c.tolerances().eps_mat * scale * c.dim();
  for (int j = 0; j < h1; ++j)
    for (int i = 0; i < h1; ++i) {
      const CMat y = apply_adapted(split.embed_h1(matrix_unit(h1, i, j)));
      const double off = y.topLeftCorner(r, r).norm() +
                         y.topRightCorner(r, h1).norm() +
                         y.bottomLeftCorner(h1, r).norm();
      if (off > eps)
        throw StructuralError(
            "block_maps: psi00/psi01/psi10 do not vanish (wrong split or "
            "non-Schwarz input)");
      bm.psi11.col(i + j * h1) = vec(CMat(y.bottomRightCorner(h1, h1)));
    }

  // Unitality identities on the blocks.
  const CVec id0 = vec(cidentity(r));
  if (h1 > 0) {
    if ((bm.phi01 * id0).norm() > eps || (bm.phi10 * id0).norm() > eps)
      throw StructuralError("block_maps: phi01(I0)/phi10(I0) nonzero");
    const CVec id1 = vec(cidentity(h1));
    if ((bm.phi11 * id0 + bm.psi11 * id1 - id1).norm() > eps)
      throw StructuralError("block_maps: phi11(I0) + psi11(I1) != I1");
  } else {
    if ((bm.phi00 * id0 - id0).norm() > eps)
      throw StructuralError("block_maps: phi00 not unital");
  }
  return bm;
}

} // namespace asymptotica
