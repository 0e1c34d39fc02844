// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line with its measured margins. The corpus (paper examples, named
// channels, 110 random UCP channels and 100 synthesized channels with d <= 8)
// is analyzed once and shared across criteria.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <iostream>
#include <optional>

#include "asymptotica/analysis.hpp"
#include "asymptotica/roundtrip.hpp"

using namespace asymptotica;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<CMat> ad_kraus() {
  CMat k1(2, 2), k2(2, 2);
  k1 << 1, 0, 0, 0.5;
  k2 << 0, std::sqrt(3.0) / 2.0, 0, 0;
  return {k1, k2};
}

struct CorpusResult {
  std::string name;
  int dim = 0;
  bool faithful = false;
  bool cp = false;
  bool h1_nonzero = false;

  double pp_idem = 0, pp_unital = 0, pp_choi_mineig = 0;
  double offdiag = 0, pp_indep = 0;
  double faithful_formula = 0;

  double cstar_assoc = 0, cstar_unit = 0, cstar_invol = 0, cstar_id = 0;
  double star_auto = 0, star_closure = 0;

  double dfa_span = 0, dfa_member = 0;
  int nstar_dim = 0, attr_dim = 0;
  double nstar_vs_attr_span = 0;

  double appendix_worst = 0;
  double appendix_min_psi_margin = std::numeric_limits<double>::infinity();
  double psi11_nonunit = 0;
  bool appendix_all_ok = true;
  int peripheral_count = 0;

  double cesaro = 0, schwarz_margin = 0;

  bool has_roundtrip = false;
  RoundtripReport rt;
};

CorpusResult squeeze(const std::string& name, const Channel& heis,
                     const AnalysisReport& rep,
                     const GroundTruth* truth) {
  CorpusResult r;
  r.name = name;
  r.dim = heis.dim();
  r.faithful = rep.sa.split.faithful();
  r.cp = heis.flags().cp;
  r.h1_nonzero = rep.sa.split.h1_dim() > 0;

  const CMat& p = rep.sa.p_p.superop;
  r.pp_idem = (p * p - p).norm();
  r.pp_unital = (p * vec(cidentity(r.dim)) - vec(cidentity(r.dim))).norm();
  Eigen::SelfAdjointEigenSolver<CMat> ces(
      hermitize(reshuffle_superop_to_choi(p, r.dim)), Eigen::EigenvaluesOnly);
  r.pp_choi_mineig = ces.eigenvalues().minCoeff();
  r.offdiag = rep.sa.attr.offdiag_residual;

  // P_P(X) must not see X01, X10, X11.
  Rng rng(0xabcdef ^ heis.superop().rows());
  const int d = r.dim;
  const int h0 = rep.sa.split.h0_dim;
  for (int t = 0; t < 2; ++t) {
    const CMat x = rng.ginibre(d, d);
    CMat ad = rep.sa.split.to_adapted(x);
    if (d > h0) {
      ad.topRightCorner(h0, d - h0) = rng.ginibre(h0, d - h0);
      ad.bottomLeftCorner(d - h0, h0) = rng.ginibre(d - h0, h0);
      ad.bottomRightCorner(d - h0, d - h0) = rng.ginibre(d - h0, d - h0);
    }
    const CMat masked = rep.sa.split.to_original(ad);
    r.pp_indep = std::max(
        r.pp_indep,
        (rep.sa.p_p.apply(x) - rep.sa.p_p.apply(masked)).norm());
  }

  r.faithful_formula = rep.sa.faithful_formula_residual;

  r.cstar_assoc = rep.cstar.associativity;
  r.cstar_unit = std::max(rep.cstar.unit, rep.star.unit_residual);
  r.cstar_invol = std::max(rep.cstar.involution, rep.star.involution_residual);
  r.cstar_id = rep.cstar.cstar_identity;
  r.star_auto = rep.cstar.star_automorphism;
  r.star_closure = rep.star.closure_residual;

  r.dfa_span = rep.dfa.span_match_residual;
  r.dfa_member = rep.dfa_check.worst_member_violation;
  r.nstar_dim = rep.dfa.nstar_dim;
  r.attr_dim = rep.dfa.attr_dim;
  r.nstar_vs_attr_span = mutual_span_residual(rep.dfa.nstar_cols,
                                              rep.sa.attr.attractor_cols);

  for (const auto& item : rep.sa.eigvec_report.items) {
    r.appendix_worst = std::max(
        r.appendix_worst,
        std::max(item.resolvent_residual,
                 std::max(item.block_diag_residual, item.phi00_residual)));
    r.appendix_min_psi_margin =
        std::min(r.appendix_min_psi_margin, item.psi11_margin);
    ++r.peripheral_count;
  }
  r.psi11_nonunit = rep.sa.eigvec_report.psi11_nonunitality;
  r.appendix_all_ok = rep.sa.eigvec_report.all_ok;

  r.cesaro = rep.cesaro_vs_spectral;
  r.schwarz_margin = rep.schwarz_worst_margin;

  if (truth) {
    r.has_roundtrip = true;
    r.rt = compare_roundtrip(*truth, rep.sa);
  }
  return r;
}

struct Corpus {
  std::vector<CorpusResult> items;
  double build_seconds = 0;
  double unfolded_seconds = 0;  // synthesize + analyze + compare
  int random_ucp_count = 0;
  int unfolded_count = 0;
};

const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus out;
    const auto t0 = Clock::now();
    AnalysisOptions opts;  // defaults: schwarz 200, cstar 64, dfa 8/64, N=1e4

    auto add = [&](const std::string& name, const Channel& ch,
                   const GroundTruth* truth, std::uint64_t seed) {
      opts.seed = seed;
      const Channel heis =
          ch.picture() == Picture::Heisenberg ? ch : ch.adjoint();
      const auto rep = run_analysis(heis, opts);
      out.items.push_back(squeeze(name, heis, rep, truth));
    };

    // Named channels.
    add("ad_heisenberg", Channel::from_kraus(ad_kraus(), Picture::Heisenberg),
        nullptr, 1);
    add("ad_schrodinger_adjoint",
        Channel::from_kraus(ad_kraus(), Picture::Schrodinger), nullptr, 2);
    add("identity_d2", Channel::from_kraus({cidentity(2)}, Picture::Heisenberg),
        nullptr, 3);
    add("identity_d3", Channel::from_kraus({cidentity(3)}, Picture::Heisenberg),
        nullptr, 4);
    add("dephasing",
        Channel::from_kraus({matrix_unit(2, 0, 0), matrix_unit(2, 1, 1)},
                            Picture::Heisenberg),
        nullptr, 5);
    {
      CMat u = CMat::Zero(2, 2);
      u(0, 0) = 1.0;
      u(1, 1) = std::polar(1.0, 2.0 * M_PI / 5.0);
      add("conj_2pi5", Channel::from_kraus({u}, Picture::Heisenberg), nullptr,
          6);
      CMat v = CMat::Zero(2, 2);
      v(0, 0) = 1.0;
      v(1, 1) = -1.0;
      add("conj_parity", Channel::from_kraus({v}, Picture::Heisenberg),
          nullptr, 7);
    }

    // 110 random UCP channels, d = 2..8.
    for (int i = 0; i < 110; ++i) {
      const int d = 2 + (i % 7);
      const int rank = 2 + (i % 3);
      const std::uint64_t seed = 10000 + static_cast<std::uint64_t>(i);
      add("random_ucp_" + std::to_string(i), random_ucp(d, rank, seed),
          nullptr, seed);
      ++out.random_ucp_count;
    }

    // 100 synthesized channels with ground truth, total d <= 8.
    const auto tu = Clock::now();
    for (int i = 0; i < 100; ++i) {
      const std::uint64_t seed = 20000 + static_cast<std::uint64_t>(i);
      const auto spec = random_unfold_spec(8, seed);
      const auto res = unfold(spec);
      add("unfolded_" + std::to_string(i), res.channel, &res.truth, seed);
      ++out.unfolded_count;
    }
    out.unfolded_seconds = seconds_since(tu);
    out.build_seconds = seconds_since(t0);
    return out;
  }();
  return c;
}

void verdict(int criterion, bool pass, const std::string& detail) {
  std::cout << "[criterion " << criterion << "] " << (pass ? "PASS" : "FAIL")
            << " " << detail << "\n";
  CHECK(pass);
}

}  // namespace

TEST_CASE("criterion 1: amplitude damping regression") {
  const auto t0 = Clock::now();
  const Tolerances tol;

  // Expected superoperators in the column-stacking basis {E00,E10,E01,E11}.
  CMat heis_expected = CMat::Zero(4, 4);
  heis_expected(0, 0) = 1.0;
  heis_expected(1, 1) = 0.5;
  heis_expected(2, 2) = 0.5;
  heis_expected(3, 0) = 0.75;
  heis_expected(3, 3) = 0.25;

  CMat pp_heis_expected = CMat::Zero(4, 4);
  pp_heis_expected(0, 0) = 1.0;
  pp_heis_expected(3, 0) = 1.0;

  CMat pp_schr_expected = CMat::Zero(4, 4);
  pp_schr_expected(0, 0) = 1.0;
  pp_schr_expected(0, 3) = 1.0;

  const auto schr = Channel::from_kraus(ad_kraus(), Picture::Schrodinger);
  const auto heis = schr.adjoint();

  const double heis_map_diff = (heis.superop() - heis_expected).norm();
  const auto pp_h = peripheral_projection(heis, tol);
  const auto pp_s = peripheral_projection(schr.superop().rows() == 4
                                              ? schr
                                              : schr,
                                          tol);
  const double pp_h_diff = (pp_h.superop - pp_heis_expected).norm();
  const double pp_s_diff = (pp_s.superop - pp_schr_expected).norm();

  const auto split = recurrent_support(heis, pp_h, tol);
  CMat q0_expected = CMat::Zero(2, 2);
  q0_expected(0, 0) = 1.0;
  const double h0_diff = (split.q0 - q0_expected).norm();

  const double elapsed = seconds_since(t0);
  const bool pass = heis_map_diff <= 1e-8 && pp_h_diff <= 1e-8 &&
                    pp_s_diff <= 1e-8 && h0_diff <= 1e-8 && elapsed < 1.0;
  std::ostringstream os;
  os << "heis_map=" << heis_map_diff << " pp_heis=" << pp_h_diff
     << " pp_schr=" << pp_s_diff << " h0=" << h0_diff << " time=" << elapsed
     << "s";
  verdict(1, pass, os.str());
}

TEST_CASE("criterion 2: structure theorem suite on >= 200 random channels") {
  const auto& c = corpus();
  const int random_total = c.random_ucp_count + c.unfolded_count;
  double worst_idem = 0, worst_unital = 0, worst_choi = 0, worst_offdiag = 0,
         worst_indep = 0;
  for (const auto& r : c.items) {
    worst_idem = std::max(worst_idem, r.pp_idem);
    worst_unital = std::max(worst_unital, r.pp_unital);
    worst_choi = std::min(worst_choi, r.pp_choi_mineig);
    worst_offdiag = std::max(worst_offdiag, r.offdiag);
    worst_indep = std::max(worst_indep, r.pp_indep);
  }
  const bool pass = random_total >= 200 && worst_idem <= 1e-7 &&
                    worst_unital <= 1e-7 && worst_choi >= -1e-7 &&
                    worst_offdiag <= 1e-10 && worst_indep <= 1e-10 &&
                    c.build_seconds < 120.0;
  std::ostringstream os;
  os << "channels=" << random_total << " idem=" << worst_idem
     << " unital=" << worst_unital << " choi_min=" << worst_choi
     << " offdiag=" << worst_offdiag << " indep=" << worst_indep
     << " time=" << c.build_seconds << "s";
  verdict(2, pass, os.str());
}

TEST_CASE("criterion 3: faithful closed form on >= 50 faithful channels") {
  const auto& c = corpus();
  int faithful_count = 0;
  double worst = 0;
  for (const auto& r : c.items) {
    if (!r.faithful) continue;
    ++faithful_count;
    worst = std::max(worst, r.faithful_formula);
  }
  const bool pass = faithful_count >= 50 && worst <= 1e-7;
  std::ostringstream os;
  os << "faithful=" << faithful_count << " worst_formula_residual=" << worst;
  verdict(3, pass, os.str());
}

TEST_CASE("criterion 4: unfolding round trip on 100 random specs") {
  const auto& c = corpus();
  int count = 0;
  bool all = true;
  double worst_rho = 0, worst_u = 0, worst_p11 = 0, worst_span = 0;
  for (const auto& r : c.items) {
    if (!r.has_roundtrip) continue;
    ++count;
    all = all && r.rt.pass;
    if (!r.rt.pass) {
      for (const auto& it : r.rt.items)
        if (!it.pass)
          std::cout << "  roundtrip fail " << r.name << ": " << it.name << " "
                    << it.value << " > " << it.budget << "\n";
    }
    auto val = [&](const char* n) {
      const auto* item = r.rt.find(n);
      return item ? item->value : 0.0;
    };
    worst_rho = std::max(worst_rho, val("rho"));
    worst_u = std::max(worst_u, val("unitaries"));
    worst_p11 = std::max(worst_p11, val("p11"));
    worst_span = std::max(worst_span, val("attr_span"));
  }
  const bool pass =
      count == 100 && all && c.unfolded_seconds < 180.0;
  std::ostringstream os;
  os << "specs=" << count << " rho=" << worst_rho << " U=" << worst_u
     << " p11=" << worst_p11 << " attr_span=" << worst_span
     << " time=" << c.unfolded_seconds << "s";
  verdict(4, pass, os.str());
}

TEST_CASE("criterion 5: Choi-Effros C* axioms on every corpus channel") {
  const auto& c = corpus();
  double assoc = 0, unit = 0, invol = 0, cstar_id = 0, star_auto = 0;
  for (const auto& r : c.items) {
    assoc = std::max(assoc, r.cstar_assoc);
    unit = std::max(unit, r.cstar_unit);
    invol = std::max(invol, r.cstar_invol);
    cstar_id = std::max(cstar_id, r.cstar_id);
    star_auto = std::max(star_auto, r.star_auto);
  }
  const bool pass = assoc <= 1e-7 && unit <= 1e-7 && invol <= 1e-7 &&
                    cstar_id <= 1e-7 && star_auto <= 1e-7;
  std::ostringstream os;
  os << "assoc=" << assoc << " unit=" << unit << " invol=" << invol
     << " cstar_id=" << cstar_id << " star_automorphism=" << star_auto;
  verdict(5, pass, os.str());
}

TEST_CASE("criterion 6: N* decompositions and faithfulness equivalence") {
  const auto& c = corpus();
  double span = 0, member = 0;
  bool equiv = true;
  int faithful_seen = 0, nonfaithful_seen = 0;
  for (const auto& r : c.items) {
    span = std::max(span, r.dfa_span);
    member = std::max(member, r.dfa_member);
    const bool nstar_equals_attr =
        r.nstar_dim == r.attr_dim && r.nstar_vs_attr_span <= 1e-7;
    equiv = equiv && (nstar_equals_attr == r.faithful);
    (r.faithful ? faithful_seen : nonfaithful_seen)++;
  }
  const bool pass = span <= 1e-7 && member <= 1e-7 && equiv &&
                    faithful_seen > 0 && nonfaithful_seen > 0;
  std::ostringstream os;
  os << "span_match=" << span << " member_violation=" << member
     << " equivalence=" << (equiv ? "both-directions" : "BROKEN")
     << " faithful=" << faithful_seen << " nonfaithful=" << nonfaithful_seen;
  verdict(6, pass, os.str());
}

TEST_CASE("criterion 7: appendix formulas on every peripheral eigenpair") {
  const auto& c = corpus();
  double worst = 0;
  double min_margin = std::numeric_limits<double>::infinity();
  bool nonunital_ok = true;
  bool all_ok = true;
  long pairs = 0;
  for (const auto& r : c.items) {
    worst = std::max(worst, r.appendix_worst);
    pairs += r.peripheral_count;
    all_ok = all_ok && r.appendix_all_ok;
    if (r.h1_nonzero) {
      min_margin = std::min(min_margin, r.appendix_min_psi_margin);
      nonunital_ok = nonunital_ok && r.psi11_nonunit > 1e-7;
    }
  }
  const bool pass = worst <= 1e-7 && all_ok && nonunital_ok &&
                    min_margin > 1e-7;
  std::ostringstream os;
  os << "eigenpairs=" << pairs << " worst_residual=" << worst
     << " min_psi11_margin=" << min_margin
     << " psi11_nonunital=" << (nonunital_ok ? "yes" : "NO");
  verdict(7, pass, os.str());
}

TEST_CASE("criterion 8: oracle agreement (Cesaro and Schwarz falsifier)") {
  const auto& c = corpus();
  double cesaro = 0;
  double schwarz = 0;
  for (const auto& r : c.items) {
    cesaro = std::max(cesaro, r.cesaro);
    if (r.cp) schwarz = std::min(schwarz, r.schwarz_margin);
  }
  const bool pass = cesaro <= 1e-3 && schwarz >= -1e-8;
  std::ostringstream os;
  os << "cesaro_worst=" << cesaro << " schwarz_worst_margin=" << schwarz;
  verdict(8, pass, os.str());
}
