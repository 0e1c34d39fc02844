#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace asymptotica {

// Seeded RNG with hand-rolled Gaussian sampling so that identical seeds give
// identical streams independently of the standard library's distribution
// implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  std::uint64_t seed() const { return seed_; }

  // Child stream, deterministic in (seed, id) and independent of how much of
  // the parent stream has been consumed.
  Rng derive(std::uint64_t id) const {
    return Rng(mix(seed_ ^ (0x9e3779b97f4a7c15ull * (id + 1))));
  }

  double uniform() {  // [0, 1)
    return (engine_() >> 11) * 0x1.0p-53;
  }

  double gauss() {
    // Box-Muller; the second deviate is discarded to keep the stream simple.
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::complex<double> cgauss() {
    const double re = gauss();
    const double im = gauss();
    return {re * M_SQRT1_2, im * M_SQRT1_2};
  }

  std::uint64_t raw() { return engine_(); }

  // i in [0, n)
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

  Eigen::MatrixXcd ginibre(int rows, int cols) {
    Eigen::MatrixXcd m(rows, cols);
    for (int j = 0; j < cols; ++j)
      for (int i = 0; i < rows; ++i) m(i, j) = cgauss();
    return m;
  }

  // Haar unitary via QR of a Ginibre matrix with the phase correction
  // Q -> Q diag(r_ii/|r_ii|).
  Eigen::MatrixXcd haar_unitary(int n) { return haar_isometry(n, n); }

  // rows >= cols; columns distributed as the first columns of a Haar unitary.
  Eigen::MatrixXcd haar_isometry(int rows, int cols) {
    Eigen::MatrixXcd g = ginibre(rows, cols);
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd q =
        qr.householderQ() * Eigen::MatrixXcd::Identity(rows, cols);
    Eigen::MatrixXcd r =
        qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    for (int j = 0; j < cols; ++j) {
      std::complex<double> d = r(j, j);
      double a = std::abs(d);
      q.col(j) *= (a > 0) ? d / a : 1.0;
    }
    return q;
  }

  // Random permutation of {0,...,n-1} (Fisher-Yates).
  std::vector<int> permutation(int n) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) std::swap(p[i], p[index(i + 1)]);
    return p;
  }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

} // namespace asymptotica
