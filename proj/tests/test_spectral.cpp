#include <catch2/catch_amalgamated.hpp>

#include "asymptotica/spectral.hpp"

using namespace asymptotica;

namespace {

std::vector<CMat> ad_kraus() {
  CMat k1(2, 2), k2(2, 2);
  k1 << 1, 0, 0, 0.5;
  k2 << 0, std::sqrt(3.0) / 2.0, 0, 0;
  return {k1, k2};
}

Channel conjugation(const CMat& u, Picture p = Picture::Heisenberg) {
  return Channel::from_kraus({u}, p);
}

std::vector<Complex> sorted_eigs(const SpectralData& sd) {
  std::vector<Complex> v(sd.eigenvalues().data(),
                         sd.eigenvalues().data() + sd.eigenvalues().size());
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    if (std::abs(a.real() - b.real()) > 1e-9) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return v;
}

}  // namespace

TEST_CASE("spectrum of the identity channel") {
  const auto id = Channel::from_kraus({cidentity(2)}, Picture::Heisenberg);
  const auto sd = spectrum(id);
  REQUIRE(sd.eigenvalues().size() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs(sd.eigenvalues()(i) - Complex(1.0)) < 1e-12);
    CHECK(sd.peripheral[i]);
  }
  const auto pp = peripheral_projection(sd);
  CHECK((pp.superop - cidentity(4)).norm() < 1e-10);
}

TEST_CASE("spectrum of amplitude damping in both pictures") {
  for (auto pic : {Picture::Schrodinger, Picture::Heisenberg}) {
    const auto c = Channel::from_kraus(ad_kraus(), pic);
    const auto sd = spectrum(c);
    const auto evs = sorted_eigs(sd);
    REQUIRE(evs.size() == 4);
    CHECK(std::abs(evs[0] - Complex(0.25)) < 1e-10);
    CHECK(std::abs(evs[1] - Complex(0.5)) < 1e-10);
    CHECK(std::abs(evs[2] - Complex(0.5)) < 1e-10);
    CHECK(std::abs(evs[3] - Complex(1.0)) < 1e-10);
    int peripheral_count = 0;
    for (bool p : sd.peripheral) peripheral_count += p ? 1 : 0;
    CHECK(peripheral_count == 1);
  }
}

TEST_CASE("spectrum of conjugation by diag(1, e^{i 2pi/5})") {
  const double theta = 2.0 * M_PI / 5.0;
  CMat u = CMat::Zero(2, 2);
  u(0, 0) = 1.0;
  u(1, 1) = std::polar(1.0, theta);
  const auto sd = spectrum(conjugation(u));
  const auto evs = sorted_eigs(sd);
  // {1, 1, e^{i theta}, e^{-i theta}}
  int ones = 0, plus = 0, minus = 0;
  for (auto l : evs) {
    if (std::abs(l - Complex(1.0)) < 1e-10) ++ones;
    if (std::abs(l - std::polar(1.0, theta)) < 1e-10) ++plus;
    if (std::abs(l - std::polar(1.0, -theta)) < 1e-10) ++minus;
  }
  CHECK(ones == 2);
  CHECK(plus == 1);
  CHECK(minus == 1);
  for (bool p : sd.peripheral) CHECK(p);
}

TEST_CASE("spectral projection of amplitude damping at lambda = 1") {
  // Heisenberg: X -> x00 I.
  const auto heis = Channel::from_kraus(ad_kraus(), Picture::Heisenberg);
  const auto p1 = spectral_projection(heis, 1.0);
  CMat expect = CMat::Zero(4, 4);
  expect(0, 0) = 1.0;  // vec(I) column on the vec(E00) coordinate
  expect(3, 0) = 1.0;
  CHECK((p1.superop - expect).norm() < 1e-9);

  // Schrodinger: X -> (x00 + x11) E00.
  const auto schr = Channel::from_kraus(ad_kraus(), Picture::Schrodinger);
  const auto p1s = spectral_projection(schr, 1.0);
  CMat expect_s = CMat::Zero(4, 4);
  expect_s(0, 0) = 1.0;
  expect_s(0, 3) = 1.0;
  CHECK((p1s.superop - expect_s).norm() < 1e-9);

  // The peripheral spectrum is {1}, so P_P coincides with P_1.
  const auto pp = peripheral_projection(heis);
  CHECK((pp.superop - p1.superop).norm() < 1e-9);

  CHECK_THROWS_AS(spectral_projection(heis, Complex(0.9, 0.0)),
                  NotAnEigenvalueError);
}

TEST_CASE("peripheral projection properties on a random UCP channel") {
  Rng rng(101);
  const int d = 4;
  const CMat v = rng.haar_isometry(d * 3, d);
  std::vector<CMat> ops;
  for (int i = 0; i < 3; ++i) ops.push_back(v.middleRows(i * d, d));
  const auto heis = Channel::from_kraus(ops, Picture::Heisenberg);
  const auto sd = spectrum(heis);
  const auto pp = peripheral_projection(sd);

  // Idempotent, unital, commutes with the superoperator, UCP.
  CHECK((pp.superop * pp.superop - pp.superop).norm() < 1e-8);
  CHECK((pp.apply(cidentity(d)) - cidentity(d)).norm() < 1e-8);
  const CMat s = heis.superop();
  CHECK((pp.superop * s - s * pp.superop).norm() < 1e-8 * s.norm());
  CHECK(psd_check(reshuffle_superop_to_choi(pp.superop, d), 1e-8));

  // Adjoint consistency: P_P(adjoint) = adjoint of P_P.
  const auto pp_adj = peripheral_projection(adjoint_channel(heis));
  CHECK((pp_adj.superop - pp.superop.adjoint()).norm() < 1e-8);
}

TEST_CASE("cesaro projection agrees with the spectral lambda = 1 projection") {
  const auto id = Channel::from_kraus({cidentity(2)}, Picture::Heisenberg);
  CHECK((cesaro_fixed_projection(id, 1000).superop - cidentity(4)).norm() <
        1e-12);

  const auto heis = Channel::from_kraus(ad_kraus(), Picture::Heisenberg);
  const auto ces = cesaro_fixed_projection(heis, 10000);
  const auto p1 = spectral_projection(heis, 1.0);
  CHECK((ces.superop - p1.superop).norm() < 1e-3);

  // Conjugation by diag(1,-1) at even N averages the -1 modes away exactly.
  CMat u = CMat::Zero(2, 2);
  u(0, 0) = 1.0;
  u(1, 1) = -1.0;
  const auto conj2 = Channel::from_kraus({u}, Picture::Heisenberg);
  const auto ces2 = cesaro_fixed_projection(conj2, 1024);
  const auto p12 = spectral_projection(conj2, 1.0);
  CHECK((ces2.superop - p12.superop).norm() < 1e-12);
  // Range is the diagonal part: span{E00, E11} = span{I, sigma_z}.
  CHECK((ces2.apply(matrix_unit(2, 0, 1))).norm() < 1e-12);
  CHECK((ces2.apply(matrix_unit(2, 0, 0)) - matrix_unit(2, 0, 0)).norm() <
        1e-12);
}

TEST_CASE("cesaro partial sums match the direct sum for small N") {
  Rng rng(7);
  const int d = 2;
  const CMat v = rng.haar_isometry(d * 2, d);
  std::vector<CMat> ops;
  for (int i = 0; i < 2; ++i) ops.push_back(v.middleRows(i * d, d));
  const auto c = Channel::from_kraus(ops, Picture::Heisenberg);
  for (unsigned long long n : {1ull, 2ull, 3ull, 7ull, 12ull}) {
    CMat direct = CMat::Zero(4, 4);
    CMat p = cidentity(4);
    for (unsigned long long k = 1; k <= n; ++k) {
      p = p * c.superop();
      direct += p;
    }
    direct /= double(n);
    CHECK((cesaro_fixed_projection(c, n).superop - direct).norm() < 1e-12);
  }
}

TEST_CASE("attractor and fixed-point bases") {
  const auto id = Channel::from_kraus({cidentity(2)}, Picture::Heisenberg);
  CHECK(attractor_basis(id).size() == 4);

  const auto heis = Channel::from_kraus(ad_kraus(), Picture::Heisenberg);
  const auto ab = attractor_basis(heis);
  REQUIRE(ab.size() == 1);
  // Proportional to the identity.
  CHECK((ab[0] - ab[0](0, 0) * cidentity(2)).norm() < 1e-9);
  CHECK(ab[0].norm() == Catch::Approx(1.0));

  const auto schr = Channel::from_kraus(ad_kraus(), Picture::Schrodinger);
  const auto abs_ = attractor_basis(schr);
  REQUIRE(abs_.size() == 1);
  // Proportional to E00.
  CHECK(std::abs(std::abs(abs_[0](0, 0)) - 1.0) < 1e-9);
  CHECK(abs_[0].norm() == Catch::Approx(1.0));

  const auto fb = fixed_point_basis(heis);
  REQUIRE(fb.size() == 1);  // span{I}
  CHECK((fb[0] - fb[0](0, 0) * cidentity(2)).norm() < 1e-9);
  const auto fbs = fixed_point_basis(schr);
  REQUIRE(fbs.size() == 1);  // span{E00}
  CHECK(std::abs(std::abs(fbs[0](0, 0)) - 1.0) < 1e-9);

  // Fix subset of Attr: conjugation by diag(1, e^{i theta}), theta generic.
  CMat u = CMat::Zero(2, 2);
  u(0, 0) = 1.0;
  u(1, 1) = std::polar(1.0, std::sqrt(2.0));
  const auto cj = Channel::from_kraus({u}, Picture::Heisenberg);
  const auto fixed = fixed_point_basis(cj);
  REQUIRE(fixed.size() == 2);
  for (const auto& f : fixed) {
    CHECK(std::abs(f(0, 1)) < 1e-10);
    CHECK(std::abs(f(1, 0)) < 1e-10);
  }
}

TEST_CASE("semisimplicity check") {
  const auto id = Channel::from_kraus({cidentity(2)}, Picture::Heisenberg);
  CHECK(semisimplicity_check(id, 1.0));
  const auto heis = Channel::from_kraus(ad_kraus(), Picture::Heisenberg);
  CHECK(semisimplicity_check(heis, 1.0));

  // A raw Jordan-block superoperator (not a channel).
  CMat j = cidentity(4);
  j(0, 1) = 1.0;
  const auto raw = Channel::from_superop(j, Picture::Heisenberg);
  CHECK_FALSE(semisimplicity_check(raw, 1.0));
  CHECK_THROWS_AS(peripheral_projection(raw), DefectivenessError);
}

TEST_CASE("non-peripheral sector decays under iteration") {
  Rng rng(55);
  const int d = 3;
  const CMat v = rng.haar_isometry(d * 2, d);
  std::vector<CMat> ops;
  for (int i = 0; i < 2; ++i) ops.push_back(v.middleRows(i * d, d));
  const auto c = Channel::from_kraus(ops, Picture::Heisenberg);
  const auto sd = spectrum(c);
  const auto pp = peripheral_projection(sd);
  double lam_max = 0.0;
  double kappa = 0.0;
  for (std::size_t cid = 0; cid < sd.pairs.clusters.size(); ++cid) {
    bool per = false;
    for (int m : sd.pairs.clusters[cid].members) per = per || sd.peripheral[m];
    if (per) continue;
    for (int m : sd.pairs.clusters[cid].members)
      lam_max = std::max(lam_max, std::abs(sd.eigenvalues()(m)));
    kappa += sd.pairs.cluster_projector(static_cast<int>(cid)).norm();
  }
  const CMat s64 = power(c, 64).superop();
  const double lhs = (s64 * (cidentity(d * d) - pp.superop)).norm();
  CHECK(lhs <= std::pow(lam_max + 1e-8, 64) * kappa + 1e-12);
}
