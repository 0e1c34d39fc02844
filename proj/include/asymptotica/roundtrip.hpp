#pragma once

// Gauge-aware comparison between the declared asymptotics of a synthesized
// channel and the structures recovered by analysis. The decomposition is
// unique only up to block relabeling and local frame rotations A (x) B, so:
// blocks are matched by (d1,d2) signature and projector overlap, rho_k by
// sorted spectra, U_k after aligning the first tensor factor through the
// recovered isometries, and everything else (P_P, P_11, attractor span,
// peripheral spectrum) in the original gauge-free coordinates.

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "asymptotica/structure.hpp"
#include "asymptotica/unfolder.hpp"

namespace asymptotica {

struct RoundtripItem {
  std::string name;
  double value = 0.0;  // measured deviation
  double budget = 0.0;
  bool pass = false;
};

struct RoundtripReport {
  std::vector<RoundtripItem> items;
  bool pass = true;

  void add(const std::string& name, double value, double budget) {
    items.push_back({name, value, budget, value <= budget});
    pass = pass && items.back().pass;
  }
  const RoundtripItem* find(const std::string& name) const {
    for (const auto& it : items)
      if (it.name == name) return &it;
    return nullptr;
  }
};

namespace detail {

// Van Loan rearrangement: if z = a (x) b with a d1 x d1 and b d2 x d2, the
// rearranged matrix is the rank-one vec(a) vec(b)^T.
inline CMat kron_rearrange(const CMat& z, int d1, int d2) {
  CMat r(d1 * d1, d2 * d2);
  for (int i = 0; i < d1; ++i)
    for (int j = 0; j < d1; ++j)
      for (int a = 0; a < d2; ++a)
        for (int b = 0; b < d2; ++b)
          r(i + j * d1, a + b * d2) = z(i * d2 + a, j * d2 + b);
  return r;
}

struct KronFactors {
  CMat a;
  CMat b;
  double residual = 0.0;
};

// Nearest Kronecker factorization with both factors polished to unitaries.
inline KronFactors nearest_kron_unitaries(const CMat& z, int d1, int d2) {
  KronFactors out;
  const CMat r = kron_rearrange(z, d1, d2);
  Eigen::JacobiSVD<CMat> svd(r, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double s = svd.singularValues()(0);
  CMat a = devec(CVec(std::sqrt(s) * svd.matrixU().col(0)), d1, d1);
  CMat b = devec(CVec(std::sqrt(s) * svd.matrixV().col(0).conjugate()), d2, d2);
  a = polar_unitary(a);
  b = polar_unitary(b);
  // Fix the joint phase so a (x) b matches z.
  const Complex overlap = hs_inner(kron(a, b), z);
  const double mag = std::abs(overlap);
  if (mag > 0) a *= overlap / mag;
  out.residual = (kron(a, b) - z).norm();
  out.a = std::move(a);
  out.b = std::move(b);
  return out;
}

inline std::vector<int> cycle_type(const std::vector<int>& perm) {
  std::vector<int> lens;
  std::vector<bool> seen(perm.size(), false);
  for (std::size_t s = 0; s < perm.size(); ++s) {
    if (seen[s]) continue;
    int len = 0;
    std::size_t c = s;
    while (!seen[c]) {
      seen[c] = true;
      c = static_cast<std::size_t>(perm[c]);
      ++len;
    }
    lens.push_back(len);
  }
  std::sort(lens.begin(), lens.end());
  return lens;
}

// Greedy multiset matching distance between two complex spectra.
inline double spectrum_distance(const CVec& a, const CVec& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  std::vector<bool> used(static_cast<std::size_t>(b.size()), false);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    Eigen::Index at = 0;
    for (Eigen::Index j = 0; j < b.size(); ++j) {
      if (used[static_cast<std::size_t>(j)]) continue;
      const double dd = std::abs(a(i) - b(j));
      if (dd < best) {
        best = dd;
        at = j;
      }
    }
    used[static_cast<std::size_t>(at)] = true;
    worst = std::max(worst, best);
  }
  return worst;
}

// Distance of the phase-optimal alignment phase*u to v.
inline double unitary_distance_up_to_phase(const CMat& u, const CMat& v) {
  const Complex overlap = hs_inner(u, v);
  const double mag = std::abs(overlap);
  const Complex phase = mag > 0 ? overlap / mag : Complex(1.0);
  return (phase * u - v).norm();
}

} // namespace detail

struct RoundtripBudgets {
  double rho = 1e-6;
  double unitary = 1e-6;
  double p11 = 1e-6;
  double p_p = 1e-6;
  double attr_span = 1e-7;
  double spectrum = 1e-7;
  double projector = 1e-6;
  double kron_gauge = 1e-5;  // sanity on the A (x) B frame alignment
};

inline RoundtripReport compare_roundtrip(const GroundTruth& truth,
                                         const StructureAnalysis& sa,
                                         const RoundtripBudgets& budgets = {}) {
  RoundtripReport rep;
  const UnfoldSpec& spec = truth.spec;
  const int d = spec.dim();
  const int nb = spec.block_count();
  const int r = spec.h0_dim();

  rep.add("h0_dim", std::abs(sa.split.h0_dim - r), 0);
  rep.add("h1_dim", std::abs(sa.split.h1_dim() - spec.h1_dim), 0);
  if (!rep.pass) return rep;

  // Block (d1,d2) multiset, exact.
  auto signature = [](int d1, int d2) { return d1 * 1000 + d2; };
  std::vector<int> sig_dec, sig_rec;
  for (const auto& b : spec.blocks) sig_dec.push_back(signature(b.d1, b.d2));
  for (const auto& b : sa.wolf.blocks) sig_rec.push_back(signature(b.d1, b.d2));
  std::sort(sig_dec.begin(), sig_dec.end());
  std::sort(sig_rec.begin(), sig_rec.end());
  rep.add("block_multiset", sig_dec == sig_rec ? 0 : 1, 0);
  if (!rep.pass) return rep;

  // Lift recovered isometries and projectors to original coordinates.
  const CMat h0cols = sa.split.basis_change.leftCols(sa.split.h0_dim);
  std::vector<CMat> iso_rec, proj_rec;
  for (const auto& b : sa.wolf.blocks) {
    iso_rec.push_back(h0cols * b.iso);
    proj_rec.push_back(h0cols * b.projector * h0cols.adjoint());
  }
  std::vector<CMat> iso_dec, proj_dec;
  for (int k = 0; k < nb; ++k) {
    iso_dec.push_back(spec.iso(k));
    proj_dec.push_back(spec.iso(k) * spec.iso(k).adjoint());
  }

  // Match recovered blocks to declared ones: same signature, then greedy
  // maximal projector overlap.
  std::vector<int> match(static_cast<std::size_t>(nb), -1);  // rec -> dec
  std::vector<bool> taken(static_cast<std::size_t>(nb), false);
  double worst_proj = 0.0;
  for (int krec = 0; krec < nb; ++krec) {
    double best = -1.0;
    int at = -1;
    for (int kdec = 0; kdec < nb; ++kdec) {
      if (taken[static_cast<std::size_t>(kdec)]) continue;
      if (sa.wolf.blocks[static_cast<std::size_t>(krec)].d1 !=
              spec.blocks[static_cast<std::size_t>(kdec)].d1 ||
          sa.wolf.blocks[static_cast<std::size_t>(krec)].d2 !=
              spec.blocks[static_cast<std::size_t>(kdec)].d2)
        continue;
      const double o =
          (proj_rec[static_cast<std::size_t>(krec)] *
           proj_dec[static_cast<std::size_t>(kdec)])
              .trace()
              .real();
      if (o > best) {
        best = o;
        at = kdec;
      }
    }
    if (at < 0) {
      rep.add("block_matching", 1, 0);
      return rep;
    }
    taken[static_cast<std::size_t>(at)] = true;
    match[static_cast<std::size_t>(krec)] = at;
    worst_proj = std::max(worst_proj,
                          (proj_rec[static_cast<std::size_t>(krec)] -
                           proj_dec[static_cast<std::size_t>(at)])
                              .norm());
  }
  rep.add("block_projectors", worst_proj, budgets.projector);

  // Permutation: mapped equality and cycle type.
  std::vector<int> pi_mapped(static_cast<std::size_t>(nb), -1);
  for (int k = 0; k < nb; ++k)
    pi_mapped[static_cast<std::size_t>(match[static_cast<std::size_t>(k)])] =
        match[static_cast<std::size_t>(sa.wolf.permutation[static_cast<std::size_t>(k)])];
  rep.add("pi_cycle_type",
          detail::cycle_type(pi_mapped) == detail::cycle_type(spec.permutation)
              ? 0
              : 1,
          0);
  rep.add("pi_exact", pi_mapped == spec.permutation ? 0 : 1, 0);

  // rho_k by sorted spectra.
  double worst_rho = 0.0;
  for (int k = 0; k < nb; ++k) {
    Eigen::SelfAdjointEigenSolver<CMat> er(
        hermitize(sa.wolf.blocks[static_cast<std::size_t>(k)].rho),
        Eigen::EigenvaluesOnly);
    Eigen::SelfAdjointEigenSolver<CMat> ed(
        hermitize(spec.rho_k(match[static_cast<std::size_t>(k)])),
        Eigen::EigenvaluesOnly);
    worst_rho = std::max(
        worst_rho,
        (er.eigenvalues() - ed.eigenvalues()).cwiseAbs().maxCoeff());
  }
  rep.add("rho", worst_rho, budgets.rho);

  // U_k after aligning the first tensor factor: the frames satisfy
  // iso_rec = iso_dec (A (x) B), and the recovered unitary with theorem
  // label t (source block) obeys u_t ~ A_t^dag U^dec_{match(t)} A_{k(t)}
  // with k(t) the recovered target block, pi_rec(k) = t.
  std::vector<CMat> gauge_a(static_cast<std::size_t>(nb));
  double worst_gauge = 0.0;
  for (int k = 0; k < nb; ++k) {
    const auto& b = sa.wolf.blocks[static_cast<std::size_t>(k)];
    const CMat z = iso_dec[static_cast<std::size_t>(
                       match[static_cast<std::size_t>(k)])]
                       .adjoint() *
                   iso_rec[static_cast<std::size_t>(k)];
    const auto kf = detail::nearest_kron_unitaries(z, b.d1, b.d2);
    worst_gauge = std::max(worst_gauge, kf.residual);
    gauge_a[static_cast<std::size_t>(k)] = kf.a;
  }
  rep.add("frame_gauge", worst_gauge, budgets.kron_gauge);

  std::vector<int> pi_inv(static_cast<std::size_t>(nb), -1);
  for (int k = 0; k < nb; ++k)
    pi_inv[static_cast<std::size_t>(sa.wolf.permutation[static_cast<std::size_t>(k)])] = k;
  double worst_u = 0.0;
  for (int t = 0; t < nb; ++t) {
    const int k = pi_inv[static_cast<std::size_t>(t)];
    const CMat aligned = gauge_a[static_cast<std::size_t>(t)] *
                         sa.wolf.unitaries[static_cast<std::size_t>(t)] *
                         gauge_a[static_cast<std::size_t>(k)].adjoint();
    worst_u = std::max(
        worst_u,
        detail::unitary_distance_up_to_phase(
            aligned,
            spec.unitaries[static_cast<std::size_t>(
                match[static_cast<std::size_t>(t)])]));
  }
  rep.add("unitaries", worst_u, budgets.unitary);

  // Peripheral projection, gauge-free.
  rep.add("p_p", (sa.p_p.superop - truth.p_p).norm(), budgets.p_p);

  // P_11 as the map X -> Q1 P_P(Q0 X Q0) Q1 in declared coordinates, from
  // both peripheral projections.
  if (spec.h1_dim > 0) {
    const int h1 = spec.h1_dim;
    double p11_diff = 0.0;
    for (int j = 0; j < r; ++j)
      for (int i = 0; i < r; ++i) {
        CMat z = CMat::Zero(d, d);
        z(i, j) = 1.0;
        const CMat y_rec = devec(CVec(sa.p_p.superop * vec(z)), d, d);
        const CMat dec = devec(CVec(truth.p11_full.col(i + j * r)), h1, h1);
        p11_diff = std::max(
            p11_diff, (y_rec.bottomRightCorner(h1, h1) - dec).norm());
      }
    rep.add("p11", p11_diff, budgets.p11);
  } else {
    rep.add("p11", 0.0, budgets.p11);
  }

  // Attractor span equality.
  rep.add("attr_span",
          mutual_span_residual(
              orthonormal_cols(stack_as_columns(truth.attr_basis), 1e-8),
              sa.attr.attractor_cols),
          budgets.attr_span);

  // Peripheral spectrum of the asymptotic action.
  const CVec rec_spec =
      Eigen::ComplexEigenSolver<CMat>(sa.attr.asymptotic_action, false)
          .eigenvalues();
  rep.add("peripheral_spectrum",
          detail::spectrum_distance(rec_spec, truth.peripheral_spectrum),
          budgets.spectrum);

  return rep;
}

} // namespace asymptotica
