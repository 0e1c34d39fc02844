#pragma once

// Constructive synthesis of UCP maps with prescribed asymptotics:
// Phi_E = Lambda o Phi_00 o Phi_pinch on H = ((+)_k H_{k,1} (x) H_{k,2}) (+) H1.
//
// Canonical layout: the blocks occupy consecutive coordinates, with tensor
// index alpha*d2 + beta inside block k; H1 takes the last h1_dim coordinates.
// The transient map is a matrix on the unnormalized matrix-unit basis of the
// algebra: column a_off(k) + (alpha + beta*d1) holds vec of the image of
// E_{alpha beta} (x) I_{d2,k} in H1 coordinates (column-major within the
// block factor, matching vec()).

#include <numeric>
#include <vector>

#include "asymptotica/channel.hpp"
#include "asymptotica/spectral.hpp"
#include "asymptotica/structure.hpp"

namespace asymptotica {

struct UnfoldBlock {
  int d1 = 0;
  int d2 = 0;
};

struct UnfoldSpec {
  std::vector<UnfoldBlock> blocks;
  int h1_dim = 0;
  std::vector<int> permutation;  // pi, 0-based, d1_{pi(k)} = d1_k
  std::vector<CMat> unitaries;   // U_k on the d1_k factor (theorem labels)
  CMat transient_map;            // h1^2 x m, empty when h1_dim = 0
  std::vector<CMat> rho;         // optional per-block states; empty = I/m_k
  std::uint64_t seed = 0;

  int block_count() const { return static_cast<int>(blocks.size()); }
  int h0_dim() const {
    int r = 0;
    for (const auto& b : blocks) r += b.d1 * b.d2;
    return r;
  }
  int dim() const { return h0_dim() + h1_dim; }
  int algebra_dim() const {
    int m = 0;
    for (const auto& b : blocks) m += b.d1 * b.d1;
    return m;
  }
  int block_offset(int k) const {
    int off = 0;
    for (int t = 0; t < k; ++t) off += blocks[t].d1 * blocks[t].d2;
    return off;
  }
  int algebra_offset(int k) const {
    int off = 0;
    for (int t = 0; t < k; ++t) off += blocks[t].d1 * blocks[t].d1;
    return off;
  }
  CMat rho_k(int k) const {
    if (!rho.empty()) return rho[static_cast<std::size_t>(k)];
    const int m2 = blocks[static_cast<std::size_t>(k)].d2;
    return cidentity(m2) / double(m2);
  }
  // Canonical isometry C^{d1} (x) C^{d2} -> H for block k.
  CMat iso(int k) const {
    const auto& b = blocks[static_cast<std::size_t>(k)];
    CMat v = CMat::Zero(dim(), b.d1 * b.d2);
    const int off = block_offset(k);
    for (int t = 0; t < b.d1 * b.d2; ++t) v(off + t, t) = 1.0;
    return v;
  }
};

// ---------------------------------------------------------------------------

namespace detail {

// Coordinates of the weighted pinch of Z on the unnormalized algebra basis:
// x_k = tr_{k,2}( P_k Z P_k (I (x) rho_k) ), returned as stacked vec(x_k).
inline CVec pinch_coords(const UnfoldSpec& spec, const CMat& z,
                         const Tolerances& tol = {}) {
  CVec coords(spec.algebra_dim());
  for (int k = 0; k < spec.block_count(); ++k) {
    const auto& b = spec.blocks[static_cast<std::size_t>(k)];
    const CMat compressed = spec.iso(k).adjoint() * z * spec.iso(k);
    const CMat x =
        partial_trace_weighted(compressed, b.d1, b.d2, spec.rho_k(k), tol);
    coords.segment(spec.algebra_offset(k), b.d1 * b.d1) = vec(x);
  }
  return coords;
}

// (+)_k x_k (x) I_{d2,k} from stacked coordinates, embedded in B(H).
inline CMat embed_algebra(const UnfoldSpec& spec, const CVec& coords) {
  CMat out = CMat::Zero(spec.dim(), spec.dim());
  for (int k = 0; k < spec.block_count(); ++k) {
    const auto& b = spec.blocks[static_cast<std::size_t>(k)];
    const CMat x = devec(coords.segment(spec.algebra_offset(k), b.d1 * b.d1),
                         b.d1, b.d1);
    out += spec.iso(k) * kron(x, cidentity(b.d2)) * spec.iso(k).adjoint();
  }
  return out;
}

// Coordinates after the block automorphism: target block k receives
// U_{pi(k)}^dag x_{pi(k)} U_{pi(k)}.
inline CVec automorphism_coords(const UnfoldSpec& spec, const CVec& coords) {
  CVec out(coords.size());
  for (int k = 0; k < spec.block_count(); ++k) {
    const int j = spec.permutation[static_cast<std::size_t>(k)];
    const auto& bj = spec.blocks[static_cast<std::size_t>(j)];
    const CMat xj =
        devec(coords.segment(spec.algebra_offset(j), bj.d1 * bj.d1), bj.d1,
              bj.d1);
    const CMat& u = spec.unitaries[static_cast<std::size_t>(j)];
    out.segment(spec.algebra_offset(k), bj.d1 * bj.d1) =
        vec(CMat(u.adjoint() * xj * u));
  }
  return out;
}

// H1 component of Lambda: P applied to algebra coordinates.
inline CMat transient_image(const UnfoldSpec& spec, const CVec& coords) {
  if (spec.h1_dim == 0) return CMat(0, 0);
  return devec(CVec(spec.transient_map * coords), spec.h1_dim, spec.h1_dim);
}

inline CMat lambda_of_coords(const UnfoldSpec& spec, const CVec& coords) {
  CMat out = embed_algebra(spec, coords);
  if (spec.h1_dim > 0)
    out.bottomRightCorner(spec.h1_dim, spec.h1_dim) =
        transient_image(spec, coords);
  return out;
}

} // namespace detail

// ---------------------------------------------------------------------------

inline void validate_spec(const UnfoldSpec& spec, const Tolerances& tol = {}) {
  std::vector<std::string> bad;
  if (spec.blocks.empty()) bad.push_back("no blocks");
  for (const auto& b : spec.blocks)
    if (b.d1 < 1 || b.d2 < 1) bad.push_back("block with d1 or d2 < 1");
  if (spec.h1_dim < 0) bad.push_back("negative h1_dim");
  const int nb = spec.block_count();
  if (static_cast<int>(spec.permutation.size()) != nb) {
    bad.push_back("permutation length mismatch");
  } else {
    std::vector<bool> seen(nb, false);
    for (int k = 0; k < nb; ++k) {
      const int j = spec.permutation[static_cast<std::size_t>(k)];
      if (j < 0 || j >= nb || seen[static_cast<std::size_t>(j)]) {
        bad.push_back("permutation is not a bijection");
        break;
      }
      seen[static_cast<std::size_t>(j)] = true;
      if (spec.blocks[static_cast<std::size_t>(j)].d1 !=
          spec.blocks[static_cast<std::size_t>(k)].d1)
        bad.push_back("permutation violates d1 compatibility");
    }
  }
  if (static_cast<int>(spec.unitaries.size()) != nb) {
    bad.push_back("unitaries length mismatch");
  } else {
    for (int k = 0; k < nb; ++k) {
      const auto& u = spec.unitaries[static_cast<std::size_t>(k)];
      const int d1 = spec.blocks[static_cast<std::size_t>(k)].d1;
      if (u.rows() != d1 || u.cols() != d1)
        bad.push_back("unitary dimension mismatch");
      else if ((u.adjoint() * u - cidentity(d1)).norm() > tol.eps_mat * 100)
        bad.push_back("U_k is not unitary");
    }
  }
  if (!spec.rho.empty()) {
    if (static_cast<int>(spec.rho.size()) != nb) {
      bad.push_back("rho length mismatch");
    } else {
      for (int k = 0; k < nb; ++k) {
        const auto& r = spec.rho[static_cast<std::size_t>(k)];
        const int d2 = spec.blocks[static_cast<std::size_t>(k)].d2;
        if (r.rows() != d2 || r.cols() != d2)
          bad.push_back("rho_k dimension mismatch");
        else {
          Eigen::SelfAdjointEigenSolver<CMat> es(hermitize(r),
                                                 Eigen::EigenvaluesOnly);
          if (std::abs(r.trace() - Complex(1.0)) > 1e-8 ||
              es.eigenvalues().minCoeff() <= tol.eps_faith)
            bad.push_back("rho_k is not an invertible state");
        }
      }
    }
  }
  if (spec.h1_dim > 0) {
    const int m = spec.algebra_dim();
    if (spec.transient_map.rows() != spec.h1_dim * spec.h1_dim ||
        spec.transient_map.cols() != m) {
      bad.push_back("transient_map dimension mismatch");
    } else {
      // Unital on the algebra: image of (+)_k I is I_{H1}.
      CVec id_coords = CVec::Zero(m);
      for (int k = 0; k < spec.block_count(); ++k) {
        const int d1 = spec.blocks[static_cast<std::size_t>(k)].d1;
        for (int a = 0; a < d1; ++a)
          id_coords(spec.algebra_offset(k) + a + a * d1) = 1.0;
      }
      if ((spec.transient_map * id_coords - vec(cidentity(spec.h1_dim)))
              .norm() > tol.eps_alg * 10)
        bad.push_back("transient_map is not unital on the algebra");
      // CP of the Arveson extension P o pinch: B(H0) -> B(H1).
      const int r = spec.h0_dim();
      const int h1 = spec.h1_dim;
      CMat choi = CMat::Zero(r * h1, r * h1);
      UnfoldSpec probe = spec;  // use maximally mixed weights for the pinch
      probe.rho.clear();
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) {
          CMat z = CMat::Zero(spec.dim(), spec.dim());
          z(i, j) = 1.0;
          const CMat img =
              detail::transient_image(spec, detail::pinch_coords(probe, z, tol));
          for (int k = 0; k < h1; ++k)
            for (int l = 0; l < h1; ++l)
              choi(i * h1 + k, j * h1 + l) = img(k, l);
        }
      if (!psd_check(choi, tol.eps_eig * 100))
        bad.push_back("transient_map composed with the pinch is not CP");
    }
  } else if (spec.transient_map.size() != 0) {
    bad.push_back("transient_map given but h1_dim = 0");
  }
  if (!bad.empty()) {
    std::string msg = "invalid unfold spec:";
    for (const auto& b : bad) msg += " [" + b + "]";
    throw ValidationError(msg);
  }
}

// Z -> (+)_k tr_{k,2}(P_k Z P_k) (x) rho-weighted identity; UCP onto the
// algebra inside B(H0), CP on B(H); pinch(I_H) = I_{H0}.
inline Channel pinch_map(const UnfoldSpec& spec, const Tolerances& tol = {}) {
  validate_spec(spec, tol);
  const int d = spec.dim();
  CMat s(d * d, d * d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      CMat z = CMat::Zero(d, d);
      z(i, j) = 1.0;
      s.col(i + j * d) =
          vec(detail::embed_algebra(spec, detail::pinch_coords(spec, z, tol)));
    }
  return Channel::from_superop(std::move(s), Picture::Heisenberg, tol);
}

// The *-automorphism of the algebra, extended to a UCP map on B(H0) by
// precomposition with the pinch.
inline Channel block_automorphism(const UnfoldSpec& spec,
                                  const Tolerances& tol = {}) {
  validate_spec(spec, tol);
  UnfoldSpec h0only = spec;
  h0only.h1_dim = 0;
  h0only.transient_map = CMat();
  const int r = spec.h0_dim();
  CMat s(r * r, r * r);
  for (int j = 0; j < r; ++j)
    for (int i = 0; i < r; ++i) {
      CMat z = CMat::Zero(r, r);
      z(i, j) = 1.0;
      s.col(i + j * r) = vec(detail::embed_algebra(
          h0only, detail::automorphism_coords(
                      h0only, detail::pinch_coords(h0only, z, tol))));
    }
  return Channel::from_superop(std::move(s), Picture::Heisenberg, tol);
}

// Lambda: algebra element a |-> a (+) P(a), as an explicit map.
struct LambdaEmbed {
  UnfoldSpec spec;
  CMat apply(const CMat& a_h0) const {
    CMat z = CMat::Zero(spec.dim(), spec.dim());
    z.topLeftCorner(spec.h0_dim(), spec.h0_dim()) = a_h0;
    return detail::lambda_of_coords(spec, detail::pinch_coords(spec, z));
  }
};

inline LambdaEmbed lambda_embed(const UnfoldSpec& spec,
                                const Tolerances& tol = {}) {
  validate_spec(spec, tol);
  return LambdaEmbed{spec};
}

// ---------------------------------------------------------------------------

struct GroundTruth {
  UnfoldSpec spec;
  CMat p_p;                       // declared peripheral projection, d^2 x d^2
  CMat p11_full;                  // h1^2 x r^2 in canonical coordinates
  std::vector<CMat> attr_basis;   // Lambda images of an orthonormal algebra basis
  CVec peripheral_spectrum;       // eigenvalues of the asymptotic action
};

struct UnfoldResult {
  Channel channel;  // Heisenberg UCP on B(H)
  GroundTruth truth;
};

inline UnfoldResult unfold(const UnfoldSpec& spec, const Tolerances& tol = {},
                           bool verify = true) {
  validate_spec(spec, tol);
  const int d = spec.dim();
  const int r = spec.h0_dim();
  const int h1 = spec.h1_dim;
  const int m = spec.algebra_dim();

  CMat s(d * d, d * d);
  CMat p_p(d * d, d * d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      CMat z = CMat::Zero(d, d);
      z(i, j) = 1.0;
      const CVec coords = detail::pinch_coords(spec, z, tol);
      s.col(i + j * d) =
          vec(detail::lambda_of_coords(spec, detail::automorphism_coords(spec, coords)));
      p_p.col(i + j * d) = vec(detail::lambda_of_coords(spec, coords));
    }
  UnfoldResult out;
  out.channel = Channel::from_superop(s, Picture::Heisenberg, tol);
  if (!out.channel.flags().unital || !out.channel.flags().cp)
    throw SynthesisError("unfold: synthesized map is not UCP");

  out.truth.spec = spec;
  out.truth.p_p = std::move(p_p);

  // Declared P_11 on matrix units of B(H0).
  out.truth.p11_full = CMat::Zero(h1 * h1, r * r);
  if (h1 > 0) {
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i) {
        CMat z = CMat::Zero(d, d);
        z(i, j) = 1.0;
        out.truth.p11_full.col(i + j * r) =
            vec(detail::transient_image(spec, detail::pinch_coords(spec, z, tol)));
      }
  }

  // Orthonormal algebra basis and its Lambda images.
  for (int k = 0; k < spec.block_count(); ++k) {
    const auto& b = spec.blocks[static_cast<std::size_t>(k)];
    for (int beta = 0; beta < b.d1; ++beta)
      for (int alpha = 0; alpha < b.d1; ++alpha) {
        CVec coords = CVec::Zero(m);
        coords(spec.algebra_offset(k) + alpha + beta * b.d1) =
            1.0 / std::sqrt(double(b.d2));
        out.truth.attr_basis.push_back(detail::lambda_of_coords(spec, coords));
      }
  }

  // Asymptotic spectrum from the automorphism matrix on algebra coordinates.
  CMat m00(m, m);
  for (int i = 0; i < m; ++i) {
    CVec e = CVec::Zero(m);
    e(i) = 1.0;
    m00.col(i) = detail::automorphism_coords(spec, e);
  }
  out.truth.peripheral_spectrum =
      Eigen::ComplexEigenSolver<CMat>(m00, false).eigenvalues();

  if (verify) {
    // (a) Attr(Phi_E) equals the declared K = {X (+) P(X)}.
    const auto sd = spectrum(out.channel, tol);
    const auto attr = attractor_basis(sd, tol);
    if (static_cast<int>(attr.size()) != m)
      throw SynthesisError("unfold: attractor dimension mismatch: got " +
                           std::to_string(attr.size()) + ", declared " +
                           std::to_string(m));
    double resid = mutual_span_residual(
        orthonormal_cols(stack_as_columns(out.truth.attr_basis), 1e-8),
        orthonormal_cols(stack_as_columns(attr), 1e-8));
    if (resid > tol.eps_alg)
      throw SynthesisError("unfold: attractor span mismatch, residual " +
                           std::to_string(resid));
    // (b) The restriction acts as Phi_00 (+) P o Phi_00.
    for (const auto& x : out.truth.attr_basis) {
      CMat z = CMat::Zero(d, d);
      z.topLeftCorner(r, r) = x.topLeftCorner(r, r);
      const CVec coords =
          detail::automorphism_coords(spec, detail::pinch_coords(spec, z, tol));
      const CMat expected = detail::lambda_of_coords(spec, coords);
      if ((out.channel.apply(x) - expected).norm() > tol.eps_alg)
        throw SynthesisError("unfold: restriction does not match Phi_K");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random corpus generators.

// Heisenberg UCP channel from a Haar-random isometry H -> H (x) C^rank.
inline Channel random_ucp(int d, int kraus_rank, std::uint64_t seed,
                          const Tolerances& tol = {}) {
  if (kraus_rank < 1) throw ValidationError("random_ucp: kraus_rank < 1");
  Rng rng(seed);
  const CMat v = rng.haar_isometry(d * kraus_rank, d);
  std::vector<CMat> ops;
  ops.reserve(kraus_rank);
  for (int i = 0; i < kraus_rank; ++i) ops.push_back(v.middleRows(i * d, d));
  return Channel::from_kraus(ops, Picture::Heisenberg, tol);
}

namespace detail {

// The asymptotic spectrum must stay clear of accidental near-degeneracies:
// each eigenvalue is either 1 (or exactly degenerate) or at angular distance
// >= 0.25 from 1, and pairs are either equal or >= 0.05 apart. Keeps the
// Cesaro oracle at N = 1e4 within its 1e-3 budget and the clustering sharp.
inline bool spectrum_well_separated(const CVec& evs) {
  for (Eigen::Index i = 0; i < evs.size(); ++i) {
    const double dist1 = std::abs(evs(i) - Complex(1.0));
    if (dist1 > 1e-9 && dist1 < 0.25) return false;
    for (Eigen::Index j = i + 1; j < evs.size(); ++j) {
      const double gap = std::abs(evs(i) - evs(j));
      if (gap > 1e-9 && gap < 0.05) return false;
    }
  }
  return true;
}

} // namespace detail

inline UnfoldSpec random_unfold_spec(int d_max, std::uint64_t seed) {
  if (d_max < 2) throw ValidationError("random_unfold_spec: d_max < 2");
  Rng rng(seed);
  for (int attempt = 0; attempt < 256; ++attempt) {
    UnfoldSpec spec;
    spec.seed = seed;
    int budget = d_max;
    const int want_blocks = 1 + static_cast<int>(rng.index(3));
    for (int k = 0; k < want_blocks && budget > 0; ++k) {
      static const UnfoldBlock menu[] = {{1, 1}, {1, 1}, {2, 1},
                                         {1, 2}, {2, 2}, {3, 1}};
      const UnfoldBlock pick = menu[rng.index(6)];
      if (pick.d1 * pick.d2 <= budget) {
        spec.blocks.push_back(pick);
        budget -= pick.d1 * pick.d2;
      }
    }
    if (spec.blocks.empty()) continue;
    spec.h1_dim = (rng.uniform() < 0.5 && budget > 0)
                      ? 1 + static_cast<int>(rng.index(budget))
                      : 0;

    // Permutation within equal-d1 classes.
    const int nb = spec.block_count();
    spec.permutation.assign(nb, -1);
    std::vector<int> by_d1;
    for (int d1 = 1; d1 <= 8; ++d1) {
      by_d1.clear();
      for (int k = 0; k < nb; ++k)
        if (spec.blocks[static_cast<std::size_t>(k)].d1 == d1)
          by_d1.push_back(k);
      if (by_d1.empty()) continue;
      const auto shuffled = rng.permutation(static_cast<int>(by_d1.size()));
      for (std::size_t t = 0; t < by_d1.size(); ++t)
        spec.permutation[static_cast<std::size_t>(by_d1[t])] =
            by_d1[static_cast<std::size_t>(shuffled[t])];
    }

    for (int k = 0; k < nb; ++k)
      spec.unitaries.push_back(
          rng.haar_unitary(spec.blocks[static_cast<std::size_t>(k)].d1));

    // Optional non-uniform rho_k.
    if (rng.uniform() < 0.5) {
      bool nontrivial = false;
      for (int k = 0; k < nb; ++k) {
        const int m2 = spec.blocks[static_cast<std::size_t>(k)].d2;
        const CMat w = rng.haar_unitary(m2);
        RVec probs(m2);
        double total = 0;
        for (int t = 0; t < m2; ++t) {
          probs(t) = 0.2 + rng.uniform();
          total += probs(t);
        }
        probs /= total;
        spec.rho.push_back(w * probs.cast<Complex>().asDiagonal() *
                           w.adjoint());
        nontrivial = nontrivial || m2 > 1;
      }
      if (!nontrivial) spec.rho.clear();
    }

    // Transient UCP map via a Stinespring isometry, precomposed with the
    // algebra pinch (so the idempotent compatibility holds by construction).
    if (spec.h1_dim > 0) {
      const int r = spec.h0_dim();
      const int m = spec.algebra_dim();
      const int s = 1 + static_cast<int>(rng.index(2));
      const CMat v = rng.haar_isometry(r * s, spec.h1_dim);
      spec.transient_map = CMat::Zero(spec.h1_dim * spec.h1_dim, m);
      for (int k = 0; k < nb; ++k) {
        const auto& b = spec.blocks[static_cast<std::size_t>(k)];
        for (int beta = 0; beta < b.d1; ++beta)
          for (int alpha = 0; alpha < b.d1; ++alpha) {
            CVec coords = CVec::Zero(m);
            coords(spec.algebra_offset(k) + alpha + beta * b.d1) = 1.0;
            UnfoldSpec h0only = spec;
            h0only.h1_dim = 0;
            h0only.transient_map = CMat();
            const CMat a =
                detail::embed_algebra(h0only, coords).topLeftCorner(r, r);
            const CMat img = v.adjoint() * kron(a, cidentity(s)) * v;
            spec.transient_map.col(spec.algebra_offset(k) + alpha +
                                   beta * b.d1) = vec(img);
          }
      }
    }

    // Spectrum guard.
    const int m = spec.algebra_dim();
    CMat m00(m, m);
    for (int i = 0; i < m; ++i) {
      CVec e = CVec::Zero(m);
      e(i) = 1.0;
      m00.col(i) = detail::automorphism_coords(spec, e);
    }
    const CVec evs = Eigen::ComplexEigenSolver<CMat>(m00, false).eigenvalues();
    if (!detail::spectrum_well_separated(evs)) continue;

    try {
      validate_spec(spec);
    } catch (const ValidationError&) {
      continue;
    }
    return spec;
  }
  throw NumericalError("random_unfold_spec: could not sample a separated spec");
}

} // namespace asymptotica
