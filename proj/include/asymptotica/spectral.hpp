#pragma once

// Spectrum of the superoperator, peripheral spectrum, spectral projections,
// the peripheral projection P_P, the Cesaro fixed-point projection P, and
// attractor / fixed-point bases. P_P is computed spectrally (sum of
// eigenprojections over peripheral clusters); the Cesaro operator serves as
// an independent oracle for the lambda = 1 part.

#include <vector>

#include "asymptotica/channel.hpp"
#include "asymptotica/eig.hpp"

namespace asymptotica {

struct SpectralData {
  int dim = 0;                  // Hilbert space dimension d
  SpectralPairs pairs;          // on the d^2 x d^2 superoperator
  std::vector<CMat> right_ops;  // devectorized right eigenvectors
  std::vector<CMat> left_ops;   // devectorized left eigenvectors
  std::vector<bool> peripheral; // |lambda| >= 1 - eps_per
  std::vector<int> peripheral_clusters;  // cluster ids meeting the mask

  const CVec& eigenvalues() const { return pairs.eigenvalues; }
};

enum class ProjectionKind { Peripheral, Fixed, SingleEigenvalue };

struct ProjectionMap {
  CMat superop;  // d^2 x d^2
  ProjectionKind kind = ProjectionKind::SingleEigenvalue;
  Complex lambda = 0.0;  // for SingleEigenvalue / Fixed

  CMat apply(const CMat& x) const {
    return devec_square(CVec(superop * vec(x)));
  }
  ProjectionMap adjoint() const { return {superop.adjoint(), kind, lambda}; }
};

inline SpectralData spectrum(const Channel& c, const Tolerances& tol = {}) {
  SpectralData sd;
  sd.dim = c.dim();
  sd.pairs = eig_general(c.superop(), tol.eps_eig, tol);
  const int n = static_cast<int>(sd.pairs.eigenvalues.size());
  sd.right_ops.reserve(n);
  sd.left_ops.reserve(n);
  sd.peripheral.resize(n);
  for (int i = 0; i < n; ++i) {
    sd.right_ops.push_back(devec(sd.pairs.right.col(i), sd.dim, sd.dim));
    sd.left_ops.push_back(devec(sd.pairs.left.col(i), sd.dim, sd.dim));
    sd.peripheral[i] = std::abs(sd.pairs.eigenvalues(i)) >= 1.0 - tol.eps_per;
  }
  for (std::size_t cid = 0; cid < sd.pairs.clusters.size(); ++cid) {
    bool any = false;
    for (int m : sd.pairs.clusters[cid].members) any = any || sd.peripheral[m];
    if (any) sd.peripheral_clusters.push_back(static_cast<int>(cid));
  }
  return sd;
}

// Spectral projection for one (clustered) eigenvalue.
inline ProjectionMap spectral_projection(const SpectralData& sd, Complex lambda,
                                         const Tolerances& tol = {}) {
  CMat p = CMat::Zero(sd.pairs.right.rows(), sd.pairs.right.rows());
  bool found = false;
  for (std::size_t cid = 0; cid < sd.pairs.clusters.size(); ++cid) {
    const auto& cl = sd.pairs.clusters[cid];
    if (std::abs(cl.mean - lambda) <= tol.eps_cluster) {
      if (!cl.semisimple)
        throw DefectivenessError(
            "spectral_projection: defective cluster at the requested "
            "eigenvalue");
      p += sd.pairs.cluster_projector(static_cast<int>(cid));
      found = true;
    }
  }
  if (!found)
    throw NotAnEigenvalueError("spectral_projection: not an eigenvalue");
  ProjectionMap pm;
  pm.superop = std::move(p);
  pm.kind = std::abs(lambda - Complex(1.0)) <= tol.eps_cluster
                ? ProjectionKind::Fixed
                : ProjectionKind::SingleEigenvalue;
  pm.lambda = lambda;
  return pm;
}

inline ProjectionMap spectral_projection(const Channel& c, Complex lambda,
                                         const Tolerances& tol = {}) {
  return spectral_projection(spectrum(c, tol), lambda, tol);
}

// Sum of the spectral projections over the peripheral spectrum. Defective
// peripheral clusters are an error: they contradict the Schwarz-map
// structure, so the input cannot be a Schwarz map.
inline ProjectionMap peripheral_projection(const SpectralData& sd,
                                           const Tolerances& tol = {}) {
  CMat p = CMat::Zero(sd.pairs.right.rows(), sd.pairs.right.rows());
  for (int cid : sd.peripheral_clusters) {
    if (!sd.pairs.clusters[cid].semisimple)
      throw DefectivenessError(
          "peripheral_projection: defective peripheral cluster (input is not "
          "a Schwarz map)");
    p += sd.pairs.cluster_projector(cid);
  }
  ProjectionMap pm;
  pm.superop = std::move(p);
  pm.kind = ProjectionKind::Peripheral;
  pm.lambda = 0.0;
  return pm;
}

inline ProjectionMap peripheral_projection(const Channel& c,
                                           const Tolerances& tol = {}) {
  return peripheral_projection(spectrum(c, tol), tol);
}

// (1/N) sum_{n=1..N} S^n, evaluated by binary doubling on the pair
// (S^m, sum_{n=0..m-1} S^n).
inline ProjectionMap cesaro_fixed_projection(const Channel& c,
                                             unsigned long long n_max) {
  const Eigen::Index n2 = c.superop().rows();
  CMat pow_acc = cidentity(static_cast<int>(n2));   // S^m for consumed m
  CMat sum_acc = CMat::Zero(n2, n2);                // sum_{n=0..m-1}
  CMat pow_bit = c.superop();                       // S^{2^k}
  CMat sum_bit = cidentity(static_cast<int>(n2));   // sum over 2^k terms
  unsigned long long n = n_max;
  while (n > 0) {
    if (n & 1ull) {
      sum_acc += pow_acc * sum_bit;
      pow_acc = pow_acc * pow_bit;
    }
    sum_bit += pow_bit * sum_bit;
    pow_bit = pow_bit * pow_bit;
    n >>= 1;
  }
  // sum_acc = sum_{n=0..N-1} S^n; shift to 1..N.
  CMat avg =
      (sum_acc - cidentity(static_cast<int>(n2)) + pow_acc) / double(n_max);
  ProjectionMap pm;
  pm.superop = std::move(avg);
  pm.kind = ProjectionKind::Fixed;
  pm.lambda = 1.0;
  return pm;
}

// HS-orthonormal basis of the range of the peripheral projection.
inline std::vector<CMat> attractor_basis(const SpectralData& sd,
                                         const Tolerances& tol = {}) {
  int count = 0;
  for (bool p : sd.peripheral) count += p ? 1 : 0;
  if (count == 0) return {};
  const ProjectionMap pp = peripheral_projection(sd, tol);
  CMat cols = orthonormal_cols(pp.superop, 1e-8);
  if (cols.cols() != count)
    throw NumericalError("attractor_basis: rank does not match multiplicity");
  std::vector<CMat> out;
  out.reserve(count);
  for (Eigen::Index j = 0; j < cols.cols(); ++j)
    out.push_back(devec(cols.col(j), sd.dim, sd.dim));
  return out;
}

inline std::vector<CMat> attractor_basis(const Channel& c,
                                         const Tolerances& tol = {}) {
  return attractor_basis(spectrum(c, tol), tol);
}

// Basis of the lambda = 1 eigenspace.
inline std::vector<CMat> fixed_point_basis(const SpectralData& sd,
                                           const Tolerances& tol = {}) {
  bool has_one = false;
  for (Eigen::Index i = 0; i < sd.pairs.eigenvalues.size(); ++i)
    has_one = has_one ||
              std::abs(sd.pairs.eigenvalues(i) - Complex(1.0)) <= tol.eps_cluster;
  if (!has_one) return {};
  const ProjectionMap p1 = spectral_projection(sd, 1.0, tol);
  CMat cols = orthonormal_cols(p1.superop, 1e-8);
  std::vector<CMat> out;
  out.reserve(cols.cols());
  for (Eigen::Index j = 0; j < cols.cols(); ++j)
    out.push_back(devec(cols.col(j), sd.dim, sd.dim));
  return out;
}

inline std::vector<CMat> fixed_point_basis(const Channel& c,
                                           const Tolerances& tol = {}) {
  return fixed_point_basis(spectrum(c, tol), tol);
}

inline bool semisimplicity_check(const Channel& c, Complex lambda,
                                 const Tolerances& tol = {}) {
  return semisimple_eigenvalue(c.superop(), lambda, tol.eps_eig);
}

} // namespace asymptotica
