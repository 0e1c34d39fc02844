#pragma once

// General (non-Hermitian) complex eigensolver with biorthogonal left/right
// pairs. Eigenvalues come from a Schur-based solve; eigenvalues closer than
// eps_cluster are always treated as one cluster with a joint invariant
// subspace, extracted from the SVD null spaces of (m - lambda I) and its
// adjoint. Within a cluster the left basis is rescaled so l_i^dag r_j =
// delta_ij, which makes the cluster projector sum_i r_i l_i^dag exactly
// idempotent no matter how the individual eigenvectors are conditioned.

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "asymptotica/errors.hpp"
#include "asymptotica/matrix.hpp"
#include "asymptotica/tolerances.hpp"

namespace asymptotica {

struct EigCluster {
  std::vector<int> members;   // indices into the flat eigen arrays
  Complex mean = 0.0;
  bool semisimple = true;     // joint subspace has full cluster dimension
  bool resolved = true;       // individual pairs are valid eigenvectors
};

struct SpectralPairs {
  CVec eigenvalues;                 // size n
  CMat right;                       // columns r_i
  CMat left;                        // columns l_i, l_i^dag r_j = delta within clusters
  std::vector<int> cluster_of;      // eigenvalue index -> cluster id
  std::vector<EigCluster> clusters;
  double max_residual = 0.0;        // max ||m r - lambda r|| / ||m|| over resolved pairs

  bool all_semisimple() const {
    return std::all_of(clusters.begin(), clusters.end(),
                       [](const EigCluster& c) { return c.semisimple; });
  }

  // sum_{i in cluster} r_i l_i^dag; exactly idempotent by construction.
  CMat cluster_projector(int cluster_id) const {
    const auto& c = clusters.at(cluster_id);
    CMat p = CMat::Zero(right.rows(), right.rows());
    for (int i : c.members) p += right.col(i) * left.col(i).adjoint();
    return p;
  }
};

namespace detail {

inline std::vector<std::vector<int>> cluster_indices(const CVec& lambdas,
                                                     double eps) {
  const int n = static_cast<int>(lambdas.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (std::abs(lambdas(i) - lambdas(j)) <= eps) parent[find(i)] = find(j);
  std::vector<std::vector<int>> groups(n);
  for (int i = 0; i < n; ++i) groups[find(i)].push_back(i);
  std::vector<std::vector<int>> out;
  for (auto& g : groups)
    if (!g.empty()) out.push_back(std::move(g));
  // Deterministic order: by the first member's solver index.
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

} // namespace detail

inline SpectralPairs eig_general(const CMat& m, double eps,
                                 const Tolerances& tol = {}) {
  if (m.rows() != m.cols()) throw DimensionError("eig_general: not square");
  const int n = static_cast<int>(m.rows());
  SpectralPairs out;
  if (n == 0) return out;

  Eigen::ComplexEigenSolver<CMat> ces(m, /*computeEigenvectors=*/true);
  if (ces.info() != Eigen::Success)
    throw NumericalError("eig_general: eigensolver did not converge");
  const CVec raw_lambdas = ces.eigenvalues();
  const double norm_m = std::max(m.norm(), 1e-300);

  auto groups = detail::cluster_indices(raw_lambdas, tol.eps_cluster);

  out.eigenvalues = CVec::Zero(n);
  out.right = CMat::Zero(n, n);
  out.left = CMat::Zero(n, n);
  out.cluster_of.assign(n, -1);

  int slot = 0;  // output index, clusters stored contiguously
  for (std::size_t gid = 0; gid < groups.size(); ++gid) {
    const auto& g = groups[gid];
    const int k = static_cast<int>(g.size());
    Complex mean = 0.0;
    double radius = 0.0;
    for (int i : g) mean += raw_lambdas(i);
    mean /= double(k);
    for (int i : g) radius = std::max(radius, std::abs(raw_lambdas(i) - mean));

    EigCluster cluster;
    cluster.mean = mean;

    // Joint invariant subspaces from the SVD of (m - mean I): the k smallest
    // right/left singular vectors. For a semisimple cluster exactly k
    // singular values sit at the cluster-radius scale.
    CMat shifted = m - mean * cidentity(n);
    Eigen::BDCSVD<CMat> svd(shifted,
                            Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double null_thresh =
        std::max(tol.eps_eig * norm_m, 8.0 * radius + 64.0 * 1e-16 * norm_m);
    int small = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) <= null_thresh) ++small;

    CMat r_basis, l_basis;
    bool joint_ok = small >= k;
    if (joint_ok) {
      r_basis = svd.matrixV().rightCols(k);
      l_basis = svd.matrixU().rightCols(k);
      CMat gram = l_basis.adjoint() * r_basis;  // k x k
      Eigen::JacobiSVD<CMat> gsvd(gram);
      const double smin = gsvd.singularValues().minCoeff();
      if (smin < 1e-10) {
        joint_ok = false;
      } else {
        l_basis = l_basis * gram.inverse().adjoint();  // now l^dag r = I
      }
    }

    if (!joint_ok) {
      // Defective (or pathologically ill-conditioned) cluster: keep the raw
      // solver vectors; no biorthogonality or projector is available.
      cluster.semisimple = false;
      cluster.resolved = false;
      for (int idx = 0; idx < k; ++idx) {
        const int src = g[idx];
        out.eigenvalues(slot) = raw_lambdas(src);
        out.right.col(slot) = ces.eigenvectors().col(src);
        out.left.col(slot) = ces.eigenvectors().col(src);
        out.cluster_of[slot] = static_cast<int>(out.clusters.size());
        cluster.members.push_back(slot);
        ++slot;
      }
      out.clusters.push_back(std::move(cluster));
      continue;
    }

    // Compression of m onto the joint subspace; its eigenvalues are the
    // refined cluster eigenvalues.
    CMat a_c = l_basis.adjoint() * m * r_basis;
    CMat y = cidentity(k);
    CMat y_inv_adj = cidentity(k);
    CVec evals = CVec::Constant(k, mean);
    const double scalar_dev = (a_c - mean * cidentity(k)).norm();
    if (scalar_dev > std::max(tol.eps_eig * norm_m, 4.0 * radius) && k > 1) {
      Eigen::ComplexEigenSolver<CMat> small_es(a_c, true);
      if (small_es.info() == Eigen::Success) {
        CMat yy = small_es.eigenvectors();
        Eigen::JacobiSVD<CMat> ysvd(yy);
        if (ysvd.singularValues().minCoeff() >
            1e-8 * ysvd.singularValues().maxCoeff()) {
          y = yy;
          y_inv_adj = yy.inverse().adjoint();
          evals = small_es.eigenvalues();
        } else {
          cluster.resolved = false;  // projector fine, individual pairs not
        }
      } else {
        cluster.resolved = false;
      }
    } else if (k >= 1) {
      // Nearly scalar block: every subspace vector is an eigenvector.
      for (int idx = 0; idx < k; ++idx) evals(idx) = a_c(idx, idx);
    }

    CMat rights = r_basis * y;
    CMat lefts = l_basis * y_inv_adj;
    for (int idx = 0; idx < k; ++idx) {
      out.eigenvalues(slot) = evals(idx);
      CVec r = rights.col(idx);
      CVec l = lefts.col(idx);
      const double rn = r.norm();
      if (rn > 0) {  // keep l^dag r = 1
        r /= rn;
        l *= rn;
      }
      out.right.col(slot) = r;
      out.left.col(slot) = l;
      out.cluster_of[slot] = static_cast<int>(out.clusters.size());
      cluster.members.push_back(slot);
      ++slot;
    }
    out.clusters.push_back(std::move(cluster));
  }

  // Residual contract on resolved pairs.
  for (const auto& c : out.clusters) {
    if (!c.resolved) continue;
    for (int i : c.members) {
      const double res =
          (m * out.right.col(i) - out.eigenvalues(i) * out.right.col(i)).norm();
      out.max_residual = std::max(out.max_residual, res / norm_m);
    }
  }
  if (out.max_residual > eps)
    throw NumericalError("eig_general: residual " +
                         std::to_string(out.max_residual) +
                         " exceeds requested tolerance");
  return out;
}

// dim ker(S - lambda)^2 == dim ker(S - lambda) at the eps threshold.
inline bool semisimple_eigenvalue(const CMat& m, Complex lambda, double eps) {
  const int n = static_cast<int>(m.rows());
  CMat shifted = m - lambda * cidentity(n);
  const int k1 = n - rank_svd(shifted, eps);
  const int k2 = n - rank_svd(shifted * shifted, eps);
  return k1 == k2;
}

} // namespace asymptotica
