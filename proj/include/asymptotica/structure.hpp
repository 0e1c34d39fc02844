#pragma once

// Structure analysis of a Heisenberg unital channel: recurrent/transient
// splitting from the support of P_P^dag(I), the reduced (faithful) map, the
// block decomposition of its attractor *-algebra into tensor factors with
// states rho_k, permutation pi and unitaries U_k, the transient map P_11 and
// the attractor basis {X (+) P_11(X)}, plus the peripheral-eigenvector
// resolvent checks and the Schrodinger<->Heisenberg correspondence.
//
// Coordinates: HilbertSplit.basis_change W maps adapted coordinates (H0
// block first) to the original ones. Wolf data lives on the reduced space
// C^r = H0 in adapted coordinates; user-facing operators (attractor basis,
// lifted projectors) are in original coordinates.

#include <algorithm>
#include <string>
#include <vector>

#include "asymptotica/channel.hpp"
#include "asymptotica/rng.hpp"
#include "asymptotica/spectral.hpp"
#include "asymptotica/split.hpp"

namespace asymptotica {

struct WolfBlock {
  int d1 = 0;       // dim H_{k,1} (algebra factor)
  int d2 = 0;       // dim H_{k,2} (multiplicity factor)
  CMat iso;         // r x (d1*d2) isometry, C^{d1} (x) C^{d2} -> reduced space
  CMat projector;   // r x r block projector P_k
  CMat rho;         // d2 x d2 invertible state, filled by extract_rho
};

struct WolfDecomposition {
  int reduced_dim = 0;
  std::vector<WolfBlock> blocks;
  std::vector<CMat> algebra_basis;  // HS-orthonormal basis of the attractor
                                    // algebra of the reduced map, r x r
  std::vector<int> permutation;     // pi, filled by extract_dynamics
  std::vector<CMat> unitaries;      // U_k, filled by extract_dynamics

  int algebra_dim() const { return static_cast<int>(algebra_basis.size()); }
};

struct AttractorStructure {
  std::vector<CMat> algebra_basis_00;  // r x r, reduced coordinates
  CMat p11;           // h1^2 x m, action of P_11 on the algebra basis
  CMat p11_full;      // h1^2 x r^2, X00 -> Q1 P_P(X00 (+) 0) Q1
  std::vector<CMat> attractor_basis;  // d x d, original coordinates
  CMat attractor_cols;                // orthonormalized, for membership tests
  CMat asymptotic_action;             // m x m matrix of Phi on the basis
  double offdiag_residual = 0.0;      // worst ||Q1 P_P(a (+) 0) Q0||
};

// ---------------------------------------------------------------------------

inline HilbertSplit recurrent_support(const Channel& c, const ProjectionMap& pp,
                                      const Tolerances& tol = {}) {
  const int d = c.dim();
  const CMat a = hermitize(devec(CVec(pp.superop.adjoint() * vec(cidentity(d))),
                                 d, d));
  Eigen::SelfAdjointEigenSolver<CMat> es(a);
  const double top = es.eigenvalues().maxCoeff();
  std::vector<int> keep;
  for (Eigen::Index i = es.eigenvalues().size(); i-- > 0;)
    if (es.eigenvalues()(i) > tol.eps_supp * top)
      keep.push_back(static_cast<int>(i));
  if (static_cast<int>(keep.size()) == d) {
    // Faithful: the canonical basis already splits trivially.
    HilbertSplit s;
    s.dim_total = d;
    s.h0_dim = d;
    s.q0 = cidentity(d);
    s.q1 = CMat::Zero(d, d);
    s.basis_change = cidentity(d);
    return s;
  }
  CMat h0(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    CVec v = es.eigenvectors().col(keep[j]);
    phase_canonicalize(v);
    h0.col(static_cast<Eigen::Index>(j)) = v;
  }
  HilbertSplit s = split_from_h0_basis(h0, d);
  s.validate(tol);
  return s;
}

inline HilbertSplit recurrent_support(const Channel& c,
                                      const Tolerances& tol = {}) {
  return recurrent_support(c, peripheral_projection(c, tol), tol);
}

// Compression of the Schrodinger map to B(H0), then back to the Heisenberg
// picture. B(H0) (+) 0 must be invariant under the Schrodinger map.
inline Channel reduce(const Channel& c, const HilbertSplit& split,
                      const Tolerances& tol = {}) {
  if (!c.flags().unital || c.picture() != Picture::Heisenberg)
    throw ValidationError("reduce: channel must be Heisenberg unital");
  if (split.faithful()) return c;
  const int r = split.h0_dim;
  const CMat s_schr = c.superop().adjoint();
  const double scale = std::max(1.0, s_schr.norm());
  CMat red = CMat::Zero(r * r, r * r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) {
      const CMat x = split.to_original(split.embed_h0(matrix_unit(r, i, j)));
      const CMat y = split.to_adapted(devec(CVec(s_schr * vec(x)), c.dim(), c.dim()));
      const CMat y00 = y.topLeftCorner(r, r);
      if ((y - split.embed_h0(y00)).norm() > tol.eps_mat * scale * c.dim())
        throw StructuralError(
            "reduce: B(H0) is not invariant under the Schrodinger map");
      red.col(i + j * r) = vec(y00);
    }
  Channel reduced = Channel::from_superop(red.adjoint(), Picture::Heisenberg,
                                          tol);
  // The reduced map must be faithful.
  const auto p1 = spectral_projection(reduced, 1.0, tol);
  const CMat sigma =
      hermitize(devec(CVec(p1.superop.adjoint() * vec(cidentity(r))), r, r));
  Eigen::SelfAdjointEigenSolver<CMat> es(sigma, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() <=
      tol.eps_faith * std::max(es.eigenvalues().maxCoeff(), 0.0))
    throw FaithfulnessError("reduce: reduced fixed state is not invertible");
  return reduced;
}

// ---------------------------------------------------------------------------
// Wolf decomposition of the attractor algebra of a faithful reduced map.

namespace detail {

// Random Hermitian element of span{basis} (the span must be *-closed).
inline CMat random_hermitian_in(const std::vector<CMat>& basis, Rng& rng) {
  CMat h = CMat::Zero(basis.front().rows(), basis.front().cols());
  for (const auto& b : basis) h += rng.cgauss() * b;
  h = hermitize(h);
  const double n = h.norm();
  return n > 0 ? CMat(h / n) : h;
}

// Group the (ascending) eigenvalues of a Hermitian element by gaps.
inline std::vector<std::pair<int, int>> eigen_groups(const RVec& ev,
                                                     double gap) {
  std::vector<std::pair<int, int>> groups;
  int start = 0;
  for (int i = 1; i <= ev.size(); ++i) {
    if (i == ev.size() || ev(i) - ev(i - 1) > gap) {
      groups.emplace_back(start, i - start);
      start = i;
    }
  }
  return groups;
}

} // namespace detail

inline WolfDecomposition wolf_decompose(const Channel& c_reduced,
                                        std::uint64_t seed,
                                        const Tolerances& tol = {}) {
  const int r = c_reduced.dim();
  WolfDecomposition w;
  w.reduced_dim = r;
  w.algebra_basis = attractor_basis(c_reduced, tol);
  const int m = static_cast<int>(w.algebra_basis.size());
  if (m == 0) throw NotAnAlgebraError("wolf_decompose: empty attractor");
  const CMat alg_cols = stack_as_columns(w.algebra_basis);

  // The attractor of a faithful map is a *-algebra; verify closure.
  for (const auto& a : w.algebra_basis) {
    if (span_residual(a.adjoint(), alg_cols) > tol.eps_alg)
      throw NotAnAlgebraError(
          "wolf_decompose: attractor is not closed under adjoints (input not "
          "faithful?)");
    for (const auto& b : w.algebra_basis)
      if (span_residual(a * b, alg_cols) > tol.eps_alg)
        throw NotAnAlgebraError(
            "wolf_decompose: attractor is not closed under products (input "
            "not faithful?)");
  }

  // Center: z = sum c_j a_j with [z, a_i] = 0 for all i.
  CMat comm_sys(static_cast<Eigen::Index>(m) * r * r, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const CMat comm = w.algebra_basis[j] * w.algebra_basis[i] -
                        w.algebra_basis[i] * w.algebra_basis[j];
      comm_sys.block(static_cast<Eigen::Index>(i) * r * r, j, r * r, 1) =
          vec(comm);
    }
  Eigen::BDCSVD<CMat> csvd(comm_sys, Eigen::ComputeFullV);
  const auto& csv = csvd.singularValues();
  const double cmax = csv.size() > 0 ? csv(0) : 0.0;
  std::vector<CMat> center;
  for (Eigen::Index j = csv.size(); j-- > 0;) {
    const double sv = j < csv.size() ? csv(j) : 0.0;
    if (sv > std::max(tol.eps_alg * std::max(cmax, 1.0), 1e-12) &&
        center.size() > 0)
      break;
    if (sv <= std::max(tol.eps_alg * std::max(cmax, 1.0), 1e-12)) {
      CMat z = CMat::Zero(r, r);
      for (int i = 0; i < m; ++i)
        z += csvd.matrixV()(i, j) * w.algebra_basis[i];
      center.push_back(z);
    }
  }
  if (center.empty())
    throw DecompositionError("wolf_decompose: center extraction failed");
  const int n_blocks = static_cast<int>(center.size());

  // Minimal central projections from eigenprojections of a random Hermitian
  // center element; resample when the eigenvalue gaps are too small.
  Rng rng(seed);
  std::vector<CMat> block_projectors;
  for (int attempt = 0; attempt < 16 && block_projectors.empty(); ++attempt) {
    const CMat h = detail::random_hermitian_in(center, rng);
    Eigen::SelfAdjointEigenSolver<CMat> es(h);
    const double spread =
        std::max(es.eigenvalues().maxCoeff() - es.eigenvalues().minCoeff(),
                 1.0);
    const auto groups = detail::eigen_groups(es.eigenvalues(), 1e-4 * spread);
    if (static_cast<int>(groups.size()) != n_blocks) continue;
    std::vector<CMat> cand;
    bool ok = true;
    for (auto [start, len] : groups) {
      const CMat v = es.eigenvectors().middleCols(start, len);
      CMat p = v * v.adjoint();
      if (span_residual(p, alg_cols) > tol.eps_alg * 10) {
        ok = false;
        break;
      }
      cand.push_back(std::move(p));
    }
    if (ok) block_projectors = std::move(cand);
  }
  if (block_projectors.empty())
    throw DecompositionError(
        "wolf_decompose: could not isolate minimal central projections "
        "(center eigenvalue gaps repeatedly degenerate)");

  // Per-block tensor factorization via matrix units.
  for (int k = 0; k < n_blocks; ++k) {
    const CMat& pk = block_projectors[static_cast<std::size_t>(k)];
    const int nk = static_cast<int>(std::llround(pk.trace().real()));
    Eigen::SelfAdjointEigenSolver<CMat> pes(pk);
    CMat bk(r, nk);
    int col = 0;
    for (Eigen::Index i = pes.eigenvalues().size(); i-- > 0;) {
      if (pes.eigenvalues()(i) > 0.5 && col < nk) {
        CVec v = pes.eigenvectors().col(i);
        phase_canonicalize(v);
        bk.col(col++) = v;
      }
    }
    if (col != nk)
      throw DecompositionError("wolf_decompose: block projector rank mismatch");

    // Compressed block algebra.
    std::vector<CMat> raw;
    raw.reserve(w.algebra_basis.size());
    for (const auto& a : w.algebra_basis)
      raw.push_back(bk.adjoint() * a * bk);
    const auto block_alg = orthonormal_span(raw, 1e-8);
    const int mk = static_cast<int>(block_alg.size());
    const int d1 = static_cast<int>(std::llround(std::sqrt(double(mk))));
    if (d1 * d1 != mk || nk % d1 != 0)
      throw DecompositionError(
          "wolf_decompose: block of dimension " + std::to_string(nk) +
          " carries an algebra of dimension " + std::to_string(mk) +
          " which does not factor as d1^2 with d1 | n");
    const int d2 = nk / d1;

    CMat v_block;
    if (d1 == 1) {
      v_block = cidentity(nk);
    } else {
      // Minimal projection: eigengroup of a generic Hermitian block element
      // with d1 groups of multiplicity d2 each.
      CMat g;  // nk x d2, orthonormal basis of range(e)
      Rng brng = rng.derive(1000 + static_cast<std::uint64_t>(k));
      for (int attempt = 0; attempt < 16 && g.size() == 0; ++attempt) {
        const CMat h = detail::random_hermitian_in(block_alg, brng);
        Eigen::SelfAdjointEigenSolver<CMat> hes(h);
        const double spread = std::max(
            hes.eigenvalues().maxCoeff() - hes.eigenvalues().minCoeff(), 1.0);
        const auto groups =
            detail::eigen_groups(hes.eigenvalues(), 1e-4 * spread);
        if (static_cast<int>(groups.size()) != d1) continue;
        bool sizes_ok = true;
        for (auto [start, len] : groups) sizes_ok = sizes_ok && (len == d2);
        if (!sizes_ok) continue;
        g = hes.eigenvectors().middleCols(groups.front().first, d2);
      }
      if (g.size() == 0)
        throw DecompositionError(
            "wolf_decompose: minimal projection extraction failed");

      // Orbit of g_0 under the block algebra spans C^{d1} (x) w_0.
      CMat orbit(nk, mk);
      for (int i = 0; i < mk; ++i) orbit.col(i) = block_alg[i] * g.col(0);
      const CMat g0 = g.col(0);
      CMat resid = orbit - g0 * (g0.adjoint() * orbit);
      const CMat extra = orthonormal_cols(resid, 1e-8);
      if (extra.cols() != d1 - 1)
        throw DecompositionError("wolf_decompose: orbit dimension mismatch");
      CMat h_basis(nk, d1);
      h_basis.col(0) = g0;
      h_basis.rightCols(d1 - 1) = extra;

      // t_alpha in the block algebra with t_alpha g_0 = h_alpha; then
      // xi_{alpha,beta} = t_alpha g_beta = v_alpha (x) w_beta.
      v_block = CMat(nk, nk);  // nk = d1*d2
      Eigen::ColPivHouseholderQR<CMat> solver(orbit);
      for (int alpha = 0; alpha < d1; ++alpha) {
        const CVec coeff = solver.solve(h_basis.col(alpha));
        CMat t = CMat::Zero(nk, nk);
        for (int i = 0; i < mk; ++i) t += coeff(i) * block_alg[i];
        for (int beta = 0; beta < d2; ++beta)
          v_block.col(alpha * d2 + beta) = t * g.col(beta);
      }
      // Symmetric orthogonalization absorbs the residual non-orthonormality.
      const CMat gram = v_block.adjoint() * v_block;
      if ((gram - cidentity(nk)).norm() > 1e-3)
        throw DecompositionError(
            "wolf_decompose: adapted frame is far from orthonormal");
      v_block = v_block * inv_sqrt_psd_on_support(gram, 1e-12);
    }

    // Verify: every algebra element is x (x) I in the adapted frame.
    CMat iso = bk * v_block;  // r x nk
    for (const auto& a : w.algebra_basis) {
      const CMat dblock = iso.adjoint() * a * iso;
      const CMat x = partial_trace_second(dblock, d1, d2) / double(d2);
      if ((dblock - kron(x, cidentity(d2))).norm() > tol.eps_alg * 10)
        throw DecompositionError(
            "wolf_decompose: adapted frame does not tensor-split the algebra");
    }

    WolfBlock blk;
    blk.d1 = d1;
    blk.d2 = d2;
    blk.iso = std::move(iso);
    blk.projector = pk;
    w.blocks.push_back(std::move(blk));
  }

  // sum d1*d2 must exhaust the reduced space.
  int total = 0;
  for (const auto& b : w.blocks) total += b.d1 * b.d2;
  if (total != r)
    throw DecompositionError("wolf_decompose: blocks do not exhaust H0");
  return w;
}

// rho_k from the maximal-rank fixed state of the reduced Schrodinger map.
inline void extract_rho(const Channel& c_reduced, WolfDecomposition& w,
                        const Tolerances& tol = {}) {
  const int r = c_reduced.dim();
  const auto p1 = spectral_projection(c_reduced, 1.0, tol);
  CMat sigma =
      hermitize(devec(CVec(p1.superop.adjoint() * vec(cidentity(r))), r, r));
  sigma /= sigma.trace().real();
  {
    Eigen::SelfAdjointEigenSolver<CMat> es(sigma, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() <=
        tol.eps_faith * std::max(es.eigenvalues().maxCoeff(), 0.0))
      throw FaithfulnessError("extract_rho: fixed state is not invertible");
  }
  for (auto& blk : w.blocks) {
    const CMat bsig = blk.iso.adjoint() * sigma * blk.iso;
    CMat rho = partial_trace_first(bsig, blk.d1, blk.d2);
    rho = hermitize(rho) / rho.trace().real();
    Eigen::SelfAdjointEigenSolver<CMat> res(rho, Eigen::EigenvaluesOnly);
    if (res.eigenvalues().minCoeff() <=
        tol.eps_faith * std::max(res.eigenvalues().maxCoeff(), 0.0))
      throw FaithfulnessError("extract_rho: rho_k is singular");
    const double purity = (rho * rho).trace().real();
    const CMat x = partial_trace_weighted(bsig, blk.d1, blk.d2, rho, tol) / purity;
    if ((bsig - kron(x, rho)).norm() > tol.eps_alg * 10)
      throw StructuralError(
          "extract_rho: fixed state does not factor as x (x) rho on a block");
    blk.rho = std::move(rho);
  }
}

// Permutation from block-identity probes, unitaries from the Choi rank-1
// structure of the induced *-isomorphisms.
inline void extract_dynamics(const Channel& c_reduced, WolfDecomposition& w,
                             const Tolerances& tol = {}) {
  const int nb = static_cast<int>(w.blocks.size());
  w.permutation.assign(nb, -1);
  w.unitaries.assign(nb, CMat());

  // Phi(P_j) = P_{pi^{-1}(j)} exactly.
  for (int j = 0; j < nb; ++j) {
    const CMat img = c_reduced.apply(w.blocks[j].projector);
    int target = -1;
    for (int k = 0; k < nb; ++k) {
      const double overlap =
          std::abs((w.blocks[k].projector * img).trace()) /
          double(w.blocks[k].d1 * w.blocks[k].d2);
      if (overlap > 0.5) {
        if (target >= 0)
          throw PermutationExtractionError(
              "extract_dynamics: block image smears across blocks");
        target = k;
      }
    }
    if (target < 0 ||
        (img - w.blocks[target].projector).norm() > tol.eps_alg * 10)
      throw PermutationExtractionError(
          "extract_dynamics: block identity is not mapped onto a block "
          "projector");
    if (w.permutation[target] != -1)
      throw PermutationExtractionError("extract_dynamics: pi is not injective");
    w.permutation[target] = j;  // pi(target) = j
  }
  for (int k = 0; k < nb; ++k) {
    const int j = w.permutation[k];
    if (j < 0 || w.blocks[k].d1 != w.blocks[j].d1)
      throw PermutationExtractionError(
          "extract_dynamics: pi violates the d1 compatibility");
  }

  // Theorem labeling: the unitary acting on block j's content when it is
  // mapped into block k = pi^{-1}(j) carries the source label j = pi(k).
  for (int k = 0; k < nb; ++k) {
    const int j = w.permutation[k];
    const int d1 = w.blocks[k].d1;
    if (d1 == 1) {
      w.unitaries[j] = cidentity(1);
      continue;
    }
    const int d2j = w.blocks[j].d2;
    const int d2k = w.blocks[k].d2;
    // Psi: x -> U^dag x U read between the adapted frames of blocks j and k.
    CMat choi = CMat::Zero(d1 * d1, d1 * d1);
    for (int jj = 0; jj < d1; ++jj)
      for (int ii = 0; ii < d1; ++ii) {
        const CMat a = w.blocks[j].iso *
                       kron(matrix_unit(d1, ii, jj), cidentity(d2j)) *
                       w.blocks[j].iso.adjoint();
        const CMat y = c_reduced.apply(a);
        const CMat dblock =
            w.blocks[k].iso.adjoint() * y * w.blocks[k].iso;
        const CMat x = partial_trace_second(dblock, d1, d2k) / double(d2k);
        if ((dblock - kron(x, cidentity(d2k))).norm() > tol.eps_alg * 10)
          throw PermutationExtractionError(
              "extract_dynamics: image does not tensor-split in the target "
              "block");
        for (int kk = 0; kk < d1; ++kk)
          for (int ll = 0; ll < d1; ++ll)
            choi(ii * d1 + kk, jj * d1 + ll) = x(kk, ll);
      }
    Eigen::SelfAdjointEigenSolver<CMat> ces(hermitize(choi));
    const Eigen::Index last = ces.eigenvalues().size() - 1;
    const double mu = ces.eigenvalues()(last);
    const double second = last > 0 ? std::abs(ces.eigenvalues()(last - 1)) : 0.0;
    if (std::abs(mu - d1) > tol.eps_alg * 10 * d1 || second > tol.eps_alg * 10 * d1)
      throw PermutationExtractionError(
          "extract_dynamics: induced map is not a unitary conjugation");
    const CVec v = std::sqrt(mu) * ces.eigenvectors().col(last);
    CMat u(d1, d1);
    for (int i = 0; i < d1; ++i)
      for (int kk = 0; kk < d1; ++kk) u(i, kk) = std::conj(v(i * d1 + kk));
    u = phase_canonicalize_mat(polar_unitary(u));
    // Verify the conjugation equation on matrix units.
    for (int jj = 0; jj < d1; ++jj)
      for (int ii = 0; ii < d1; ++ii) {
        const CMat a = w.blocks[j].iso *
                       kron(matrix_unit(d1, ii, jj), cidentity(d2j)) *
                       w.blocks[j].iso.adjoint();
        const CMat dblock = w.blocks[k].iso.adjoint() * c_reduced.apply(a) *
                            w.blocks[k].iso;
        const CMat x = partial_trace_second(dblock, d1, d2k) / double(d2k);
        if ((x - u.adjoint() * matrix_unit(d1, ii, jj) * u).norm() >
            tol.eps_alg * 10)
          throw PermutationExtractionError(
              "extract_dynamics: conjugation equation residual too large");
      }
    w.unitaries[j] = std::move(u);
  }
}

// The automorphism Phi_00 evaluated through the Wolf data:
// a = (+) x_k (x) I |-> (+) U_{pi(k)}^dag x_{pi(k)} U_{pi(k)} (x) I.
inline CMat wolf_automorphism_apply(const WolfDecomposition& w, const CMat& a) {
  CMat out = CMat::Zero(w.reduced_dim, w.reduced_dim);
  for (std::size_t k = 0; k < w.blocks.size(); ++k) {
    const auto& bk = w.blocks[k];
    const int j = w.permutation[k];
    const auto& bj = w.blocks[static_cast<std::size_t>(j)];
    const CMat dblock = bj.iso.adjoint() * a * bj.iso;
    const CMat x = partial_trace_second(dblock, bj.d1, bj.d2) / double(bj.d2);
    const CMat& u = w.unitaries[static_cast<std::size_t>(j)];
    out += bk.iso * kron(u.adjoint() * x * u, cidentity(bk.d2)) * bk.iso.adjoint();
  }
  return out;
}

// ---------------------------------------------------------------------------

inline AttractorStructure p11_extract(const Channel& c,
                                      const HilbertSplit& split,
                                      const WolfDecomposition& w,
                                      const ProjectionMap& pp,
                                      const Tolerances& tol = {}) {
  const int d = c.dim();
  const int r = split.h0_dim;
  const int h1 = split.h1_dim();
  const int m = w.algebra_dim();
  AttractorStructure attr;
  attr.algebra_basis_00 = w.algebra_basis;
  attr.p11 = CMat::Zero(h1 * h1, m);

  for (int i = 0; i < m; ++i) {
    const CMat lifted = split.to_original(split.embed_h0(w.algebra_basis[i]));
    const CMat y = split.to_adapted(pp.apply(lifted));
    const double off = std::max(y.topRightCorner(r, h1).norm(),
                                y.bottomLeftCorner(h1, r).norm());
    attr.offdiag_residual = std::max(attr.offdiag_residual, off);
    if (off > tol.eps_mat * 10 * d)
      throw StructuralError(
          "p11_extract: off-diagonal block of P_P(a (+) 0) does not vanish "
          "(Schwarz structure violation)");
    if ((y.topLeftCorner(r, r) - w.algebra_basis[i]).norm() > tol.eps_alg)
      throw StructuralError("p11_extract: P_00 does not fix the algebra");
    if (h1 > 0) attr.p11.col(i) = vec(CMat(y.bottomRightCorner(h1, h1)));
    attr.attractor_basis.push_back(split.to_original(
        split.embed_h0(w.algebra_basis[i]) +
        (h1 > 0 ? split.embed_h1(CMat(y.bottomRightCorner(h1, h1)))
                : CMat::Zero(d, d))));
  }

  // Full map X00 -> [P_P(X00 (+) 0)]_11 on matrix units, for the CP check
  // and P_P(X)'s independence of the other blocks.
  attr.p11_full = CMat::Zero(h1 * h1, r * r);
  if (h1 > 0) {
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i) {
        const CMat lifted =
            split.to_original(split.embed_h0(matrix_unit(r, i, j)));
        const CMat y = split.to_adapted(pp.apply(lifted));
        attr.p11_full.col(i + j * r) = vec(CMat(y.bottomRightCorner(h1, h1)));
      }
    // Unital: P_11(I0) = I1.
    if ((attr.p11_full * vec(cidentity(r)) - vec(cidentity(h1))).norm() >
        tol.eps_alg)
      throw StructuralError("p11_extract: P_11 is not unital");
    // CP: Choi of the rectangular map B(H0) -> B(H1) is PSD.
    CMat choi = CMat::Zero(r * h1, r * h1);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        const CMat img = devec(CVec(attr.p11_full.col(i + j * r)), h1, h1);
        for (int k = 0; k < h1; ++k)
          for (int l = 0; l < h1; ++l)
            choi(i * h1 + k, j * h1 + l) = img(k, l);
      }
    if (!psd_check(choi, tol.eps_eig * 10))
      throw StructuralError("p11_extract: P_11 is not completely positive");
  }

  attr.attractor_cols = orthonormal_cols(stack_as_columns(attr.attractor_basis),
                                         1e-8);
  return attr;
}

inline CMat asymptotic_action(const Channel& c, const HilbertSplit& split,
                              AttractorStructure& attr,
                              const Tolerances& tol = {}) {
  const int m = static_cast<int>(attr.attractor_basis.size());
  const int r = split.h0_dim;
  CMat action(m, m);
  for (int i = 0; i < m; ++i) {
    const CMat y = c.apply(attr.attractor_basis[i]);
    const CMat y00 = split.to_adapted(y).topLeftCorner(r, r);
    CMat recon = CMat::Zero(c.dim(), c.dim());
    for (int j = 0; j < m; ++j) {
      action(j, i) = hs_inner(attr.algebra_basis_00[j], y00);
      recon += action(j, i) * attr.attractor_basis[j];
    }
    if ((y - recon).norm() > tol.eps_alg * 10)
      throw StructuralError(
          "asymptotic_action: Phi leaves the attractor subspace");
  }
  const auto evs = eig_general(action, 1e-6, tol);
  for (Eigen::Index i = 0; i < evs.eigenvalues.size(); ++i)
    if (std::abs(std::abs(evs.eigenvalues(i)) - 1.0) > 1e-6)
      throw StructuralError(
          "asymptotic_action: non-unimodular eigenvalue on the attractor");
  attr.asymptotic_action = action;
  return action;
}

// ---------------------------------------------------------------------------
// Appendix-level checks on peripheral eigenvectors.

struct PerEigenCheck {
  Complex lambda;
  double block_diag_residual = 0.0;  // ||X01|| + ||X10||
  double phi00_residual = 0.0;       // ||phi00(X00) - lambda X00||
  double resolvent_residual = 0.0;   // ||(lambda - psi11)^{-1} phi11(X00) - X11||
  double psi11_margin = 0.0;         // min |lambda - spect(psi11)|
  bool ok = false;
};

struct EigvecCheckReport {
  std::vector<PerEigenCheck> items;
  double psi11_nonunitality = 0.0;  // ||psi11(I1) - I1||, 0 when H1 = 0
  bool all_ok = true;
};

inline EigvecCheckReport peripheral_eigvec_check(const Channel& c,
                                                 const HilbertSplit& split,
                                                 const BlockMaps& bm,
                                                 const SpectralData& sd,
                                                 const Tolerances& tol = {}) {
  EigvecCheckReport rep;
  const int r = split.h0_dim;
  const int h1 = split.h1_dim();
  CVec psi_eigs;
  if (h1 > 0) {
    psi_eigs = eig_general(bm.psi11, 1e-6, tol).eigenvalues;
    rep.psi11_nonunitality =
        (bm.psi11 * vec(cidentity(h1)) - vec(cidentity(h1))).norm();
  }
  for (std::size_t i = 0; i < sd.right_ops.size(); ++i) {
    if (!sd.peripheral[i]) continue;
    if (!sd.pairs.clusters[sd.pairs.cluster_of[i]].resolved) continue;
    PerEigenCheck item;
    item.lambda = sd.eigenvalues()(static_cast<Eigen::Index>(i));
    const CMat x = split.to_adapted(sd.right_ops[i]);  // HS-normalized
    const CMat x00 = x.topLeftCorner(r, r);
    item.block_diag_residual =
        x.topRightCorner(r, h1).norm() + x.bottomLeftCorner(h1, r).norm();
    item.phi00_residual =
        (devec(CVec(bm.phi00 * vec(x00)), r, r) - item.lambda * x00).norm();
    if (h1 > 0) {
      double margin = std::numeric_limits<double>::infinity();
      for (Eigen::Index t = 0; t < psi_eigs.size(); ++t)
        margin = std::min(margin, std::abs(item.lambda - psi_eigs(t)));
      item.psi11_margin = margin;
      const CMat lhs =
          item.lambda * cidentity(h1 * h1) - bm.psi11;
      const CVec x11_pred = lhs.partialPivLu().solve(bm.phi11 * vec(x00));
      item.resolvent_residual =
          (devec(x11_pred, h1, h1) - x.bottomRightCorner(h1, h1)).norm();
    } else {
      item.psi11_margin = std::numeric_limits<double>::infinity();
    }
    item.ok = item.block_diag_residual <= tol.eps_alg &&
              item.phi00_residual <= tol.eps_alg &&
              item.resolvent_residual <= tol.eps_alg;
    rep.all_ok = rep.all_ok && item.ok;
    rep.items.push_back(item);
  }
  if (h1 > 0 && rep.psi11_nonunitality <= tol.eps_alg) rep.all_ok = false;
  return rep;
}

// ---------------------------------------------------------------------------
// Attr(Phi) = Lambda( sigma0^{-1/2} Attr(Phi^dag) sigma0^{-1/2} ), with the
// inverse square root taken on H0 only.

struct CorrespondenceReport {
  bool faithful = false;
  double algebra_span_residual = 0.0;  // conjugated Schrodinger attractor vs algebra
  double lifted_span_residual = 0.0;   // Lambda-lift vs Attr(Phi)
};

inline CorrespondenceReport schrodinger_correspondence(
    const Channel& c, const SpectralData& sd, const HilbertSplit& split,
    const WolfDecomposition& w, const AttractorStructure& attr,
    const Tolerances& tol = {}) {
  const int d = c.dim();
  const int r = split.h0_dim;
  CorrespondenceReport rep;
  rep.faithful = split.faithful();

  const auto p1 = spectral_projection(sd, 1.0, tol);
  CMat sigma = hermitize(devec(CVec(p1.superop.adjoint() * vec(cidentity(d))),
                               d, d));
  sigma /= sigma.trace().real();
  // Inverse square root supported on H0.
  const CMat sigma_ad = split.to_adapted(sigma);
  const CMat s00 = sigma_ad.topLeftCorner(r, r);
  Eigen::SelfAdjointEigenSolver<CMat> ses(hermitize(s00),
                                          Eigen::EigenvaluesOnly);
  if (ses.eigenvalues().minCoeff() <=
      tol.eps_faith * std::max(ses.eigenvalues().maxCoeff(), 0.0))
    throw FaithfulnessError(
        "schrodinger_correspondence: sigma is singular on H0");
  const CMat inv_sqrt =
      split.to_original(split.embed_h0(inv_sqrt_psd_on_support(s00, 1e-14)));

  // Attr(Phi^dag) = range of P_P^dag.
  const ProjectionMap pp = peripheral_projection(sd, tol);
  const CMat schr_cols = orthonormal_cols(pp.superop.adjoint(), 1e-8);

  // Conjugate into the recurrent algebra and compare spans with the algebra.
  const CMat alg_cols = stack_as_columns(w.algebra_basis);
  std::vector<CMat> conj_00;
  std::vector<CMat> lifted;
  for (Eigen::Index j = 0; j < schr_cols.cols(); ++j) {
    const CMat b = devec(schr_cols.col(j), d, d);
    const CMat g = inv_sqrt * b * inv_sqrt;
    const CMat g00 = split.to_adapted(g).topLeftCorner(r, r);
    conj_00.push_back(g00);
    // Lambda-lift through the computed attractor basis coordinates.
    CMat lift = CMat::Zero(d, d);
    for (std::size_t i = 0; i < attr.attractor_basis.size(); ++i)
      lift += hs_inner(attr.algebra_basis_00[i], g00) * attr.attractor_basis[i];
    lifted.push_back(lift);
  }
  const CMat conj_cols = stack_as_columns(conj_00);
  rep.algebra_span_residual =
      mutual_span_residual(orthonormal_cols(conj_cols, 1e-8), alg_cols);
  const CMat lifted_cols = orthonormal_cols(stack_as_columns(lifted), 1e-8);
  rep.lifted_span_residual =
      mutual_span_residual(lifted_cols, attr.attractor_cols);
  return rep;
}

// ---------------------------------------------------------------------------
// Closed-form peripheral projection of a faithful map assembled from the
// Wolf data: X |-> (+)_k tr_{k,2}( P_k X P_k (I (x) rho_k) ) (x) I_{k,2}.

inline CMat assemble_faithful_pp(const WolfDecomposition& w,
                                 const Tolerances& tol = {}) {
  const int r = w.reduced_dim;
  CMat formula = CMat::Zero(r * r, r * r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) {
      const CMat e = matrix_unit(r, i, j);
      CMat acc = CMat::Zero(r, r);
      for (const auto& blk : w.blocks) {
        const CMat compressed = blk.iso.adjoint() * e * blk.iso;
        const CMat x =
            partial_trace_weighted(compressed, blk.d1, blk.d2, blk.rho, tol);
        acc += blk.iso * kron(x, cidentity(blk.d2)) * blk.iso.adjoint();
      }
      formula.col(i + j * r) = vec(acc);
    }
  return formula;
}

// ---------------------------------------------------------------------------
// Orchestration of the full structure pipeline on one Heisenberg channel.

struct StructureAnalysis {
  Channel channel;  // Heisenberg
  SpectralData spec;
  ProjectionMap p_p;
  HilbertSplit split;
  Channel reduced;
  SpectralData reduced_spec;
  ProjectionMap reduced_p_p;
  WolfDecomposition wolf;
  BlockMaps blocks;
  AttractorStructure attr;
  EigvecCheckReport eigvec_report;
  CorrespondenceReport correspondence;
  double faithful_formula_residual = 0.0;  // reduced P_P vs assembled formula
};

inline StructureAnalysis analyze_structure(const Channel& heis,
                                           std::uint64_t seed,
                                           const Tolerances& tol = {}) {
  if (heis.picture() != Picture::Heisenberg || !heis.flags().unital)
    throw ValidationError("analyze_structure: need a Heisenberg unital map");
  StructureAnalysis sa;
  sa.channel = heis;
  sa.spec = spectrum(heis, tol);
  sa.p_p = peripheral_projection(sa.spec, tol);
  sa.split = recurrent_support(heis, sa.p_p, tol);
  sa.reduced = reduce(heis, sa.split, tol);
  sa.reduced_spec = spectrum(sa.reduced, tol);
  sa.reduced_p_p = peripheral_projection(sa.reduced_spec, tol);
  sa.wolf = wolf_decompose(sa.reduced, seed, tol);
  extract_rho(sa.reduced, sa.wolf, tol);
  extract_dynamics(sa.reduced, sa.wolf, tol);
  sa.blocks = block_maps(heis, sa.split);
  sa.attr = p11_extract(heis, sa.split, sa.wolf, sa.p_p, tol);
  // The structure theorem: {X (+) P_11(X)} spans exactly the attractor.
  int peripheral_count = 0;
  for (bool p : sa.spec.peripheral) peripheral_count += p ? 1 : 0;
  if (peripheral_count != static_cast<int>(sa.attr.attractor_basis.size()))
    throw StructuralError(
        "analyze_structure: dim Attr != sum of d1_k^2 (peripheral "
        "multiplicity mismatch)");
  const double span_resid = mutual_span_residual(
      sa.attr.attractor_cols,
      orthonormal_cols(stack_as_columns(attractor_basis(sa.spec, tol)), 1e-8));
  if (span_resid > tol.eps_alg)
    throw StructuralError(
        "analyze_structure: {X (+) P11(X)} does not span the attractor");
  asymptotic_action(heis, sa.split, sa.attr, tol);
  sa.eigvec_report = peripheral_eigvec_check(heis, sa.split, sa.blocks,
                                             sa.spec, tol);
  sa.correspondence = schrodinger_correspondence(heis, sa.spec, sa.split,
                                                 sa.wolf, sa.attr, tol);
  sa.faithful_formula_residual =
      (assemble_faithful_pp(sa.wolf, tol) - sa.reduced_p_p.superop).norm();
  return sa;
}

} // namespace asymptotica
