#pragma once

// End-to-end analysis of one channel: properties -> spectrum -> P / P_P ->
// split -> reduce -> Wolf -> P_11 -> star algebra -> N* -> appendix checks,
// collected into a single report with margins, tolerances, seeds and
// per-stage wall times. The report is deterministic given (input, seed,
// tolerances); the timings subobject is the only non-deterministic part.

#include <chrono>
#include <string>
#include <vector>

#include "asymptotica/choi_effros.hpp"
#include "asymptotica/io.hpp"
#include "asymptotica/spectral.hpp"
#include "asymptotica/structure.hpp"

namespace asymptotica {

struct AnalysisOptions {
  std::uint64_t seed = 0;
  Tolerances tol;
  unsigned long long cesaro_n = 10000;
  int schwarz_trials = 200;
  int cstar_trials = 64;
  int dfa_n_max = 8;
  int dfa_trials = 64;
};

struct AnalysisReport {
  std::string digest;
  std::string input_picture;
  int dim = 0;
  AnalysisOptions opts;

  ChannelFlags flags;
  double schwarz_worst_margin = 0.0;

  StructureAnalysis sa;
  double cesaro_vs_spectral = 0.0;

  StarAlgebra star;
  CstarReport cstar;
  AutomorphyReport automorphy;
  DfaDecomposition dfa;
  DfaReport dfa_check;

  std::vector<std::pair<std::string, double>> timings;  // stage, seconds
};

inline AnalysisReport run_analysis(const Channel& input,
                                   const AnalysisOptions& opts,
                                   const std::string& digest = "") {
  using Clock = std::chrono::steady_clock;
  AnalysisReport rep;
  rep.digest = digest;
  rep.input_picture = picture_name(input.picture());
  rep.dim = input.dim();
  rep.opts = opts;

  auto t0 = Clock::now();
  auto lap = [&](const char* stage) {
    const auto t1 = Clock::now();
    rep.timings.emplace_back(
        stage, std::chrono::duration<double>(t1 - t0).count());
    t0 = t1;
  };

  const Channel heis =
      input.picture() == Picture::Heisenberg ? input : input.adjoint();
  if (!heis.flags().unital)
    throw ValidationError(
        "analysis: the map is not unital in the Heisenberg picture (not a "
        "channel pair)");
  rep.flags = input.flags();  // flags in the input's own picture
  if (!heis.flags().cp) {
    // Not CP: fall back to Schwarz falsification. A falsified map is outside
    // the theory's scope.
    const auto fr = schwarz_falsify(heis, opts.schwarz_trials, opts.seed);
    rep.schwarz_worst_margin = fr.worst_margin;
    rep.flags.schwarz_unfalsified = fr.passed;
    if (!fr.passed)
      throw StructuralError(
          "analysis: operator Schwarz inequality falsified (worst margin " +
          std::to_string(fr.worst_margin) + ")");
  } else {
    const auto fr = schwarz_falsify(heis, opts.schwarz_trials, opts.seed);
    rep.schwarz_worst_margin = fr.worst_margin;
    rep.flags.schwarz_unfalsified = true;  // CP certifies Schwarz
  }
  lap("properties");

  rep.sa = analyze_structure(heis, opts.seed, opts.tol);
  lap("structure");

  const auto cesaro = cesaro_fixed_projection(heis, opts.cesaro_n);
  const auto p1 = spectral_projection(rep.sa.spec, 1.0, opts.tol);
  rep.cesaro_vs_spectral = (cesaro.superop - p1.superop).norm();
  lap("cesaro_oracle");

  rep.star = build_star_algebra(rep.sa.p_p, rep.sa.split, rep.sa.attr,
                                opts.tol);
  rep.cstar = verify_cstar(heis, rep.sa.p_p, rep.sa.attr, opts.cstar_trials,
                           opts.seed + 1);
  rep.automorphy = peripherally_automorphic(rep.sa.p_p, rep.sa.split,
                                            rep.sa.attr, opts.tol);
  lap("choi_effros");

  const auto kernel = kernel_ideal(rep.sa.p_p, rep.sa.split, opts.tol);
  rep.dfa = dfa_nstar(rep.sa.split, rep.sa.attr, kernel, opts.tol);
  rep.dfa_check = dfa_definition_check(heis, rep.sa.p_p, rep.sa.split, rep.dfa,
                                       opts.dfa_n_max, opts.dfa_trials,
                                       opts.seed + 2, opts.tol);
  lap("dfa");
  return rep;
}

// ---------------------------------------------------------------------------

inline Json tolerances_to_json(const Tolerances& t) {
  return Json{{"eps_mat", t.eps_mat},     {"eps_eig", t.eps_eig},
              {"eps_cluster", t.eps_cluster}, {"eps_per", t.eps_per},
              {"eps_supp", t.eps_supp},   {"eps_faith", t.eps_faith},
              {"eps_alg", t.eps_alg}};
}

inline Json spectrum_fragment(const SpectralData& sd, const Tolerances& tol) {
  Json out = Json::array();
  for (const auto& cl : sd.pairs.clusters) {
    bool peripheral = false;
    for (int m : cl.members)
      peripheral = peripheral || sd.peripheral[static_cast<std::size_t>(m)];
    out.push_back(Json{{"lambda", complex_to_json(cl.mean)},
                       {"modulus", std::abs(cl.mean)},
                       {"peripheral", peripheral},
                       {"multiplicity", cl.members.size()},
                       {"semisimple", cl.semisimple}});
  }
  (void)tol;
  return out;
}

inline Json report_to_json(const AnalysisReport& rep) {
  Json j;
  j["input"] = Json{{"digest", rep.digest},
                    {"dim", rep.dim},
                    {"picture", rep.input_picture}};
  j["seed"] = rep.opts.seed;
  j["tolerances"] = tolerances_to_json(rep.opts.tol);

  j["properties"] =
      Json{{"unital", rep.flags.unital},
           {"trace_preserving", rep.flags.trace_preserving},
           {"cp", rep.flags.cp},
           {"schwarz_unfalsified", rep.flags.schwarz_unfalsified},
           {"schwarz_trials", rep.opts.schwarz_trials},
           {"schwarz_worst_margin", rep.schwarz_worst_margin}};

  j["spectrum"] = spectrum_fragment(rep.sa.spec, rep.opts.tol);

  Json blocks = Json::array();
  for (const auto& b : rep.sa.wolf.blocks)
    blocks.push_back(Json{{"d1", b.d1},
                          {"d2", b.d2},
                          {"rho_k", matrix_to_json(b.rho)}});
  Json unitaries = Json::array();
  for (const auto& u : rep.sa.wolf.unitaries)
    unitaries.push_back(matrix_to_json(u));
  const CVec action_spec =
      Eigen::ComplexEigenSolver<CMat>(rep.sa.attr.asymptotic_action, false)
          .eigenvalues();
  Json action_eigs = Json::array();
  for (Eigen::Index i = 0; i < action_spec.size(); ++i)
    action_eigs.push_back(complex_to_json(action_spec(i)));
  j["structure"] = Json{
      {"h0_dim", rep.sa.split.h0_dim},
      {"h1_dim", rep.sa.split.h1_dim()},
      {"faithful", rep.sa.split.faithful()},
      {"blocks", std::move(blocks)},
      {"permutation", rep.sa.wolf.permutation},
      {"unitaries", std::move(unitaries)},
      {"p11", matrix_to_json(rep.sa.attr.p11_full)},
      {"attractor_dim", rep.sa.attr.attractor_basis.size()},
      {"offdiag_residual", rep.sa.attr.offdiag_residual},
      {"faithful_formula_residual", rep.sa.faithful_formula_residual},
      {"asymptotic_spectrum", std::move(action_eigs)},
      {"correspondence",
       Json{{"faithful", rep.sa.correspondence.faithful},
            {"algebra_span_residual",
             rep.sa.correspondence.algebra_span_residual},
            {"lifted_span_residual",
             rep.sa.correspondence.lifted_span_residual}}}};

  j["choi_effros"] = Json{
      {"nstar_dim", rep.dfa.nstar_dim},
      {"attr_dim", rep.dfa.attr_dim},
      {"ideal_dim", rep.dfa.ideal_dim},
      {"peripherally_automorphic", rep.automorphy.peripherally_automorphic},
      {"worst_margins",
       Json{{"closure", rep.star.closure_residual},
            {"unit", rep.star.unit_residual},
            {"involution", rep.star.involution_residual},
            {"associativity", rep.cstar.associativity},
            {"cstar_identity", rep.cstar.cstar_identity},
            {"star_automorphism", rep.cstar.star_automorphism},
            {"star_vs_product", rep.automorphy.star_vs_product},
            {"p11_multiplicativity", rep.automorphy.p11_multiplicativity},
            {"dfa_member", rep.dfa_check.worst_member_violation},
            {"dfa_span_match", rep.dfa.span_match_residual}}},
      {"dfa_negative_probe_violated", rep.dfa_check.negative_probe_violated}};

  Json items = Json::array();
  for (const auto& it : rep.sa.eigvec_report.items)
    items.push_back(Json{{"lambda", complex_to_json(it.lambda)},
                         {"block_diag_residual", it.block_diag_residual},
                         {"phi00_residual", it.phi00_residual},
                         {"resolvent_residual", it.resolvent_residual},
                         {"psi11_margin", it.psi11_margin},
                         {"ok", it.ok}});
  j["appendix"] = Json{
      {"items", std::move(items)},
      {"psi11_nonunitality", rep.sa.eigvec_report.psi11_nonunitality},
      {"all_ok", rep.sa.eigvec_report.all_ok}};

  j["oracle"] = Json{{"cesaro_n", rep.opts.cesaro_n},
                     {"cesaro_vs_spectral", rep.cesaro_vs_spectral}};

  Json timings;
  for (const auto& [stage, secs] : rep.timings) timings[stage] = secs;
  j["timings"] = std::move(timings);
  return j;
}

// Human-oriented one-line-per-fact summary (stderr side of the CLI).
inline std::string report_summary(const AnalysisReport& rep) {
  std::ostringstream os;
  os << "dim=" << rep.dim << " picture=" << rep.input_picture
     << " unital=" << rep.flags.unital << " tp=" << rep.flags.trace_preserving
     << " cp=" << rep.flags.cp << "\n";
  os << "h0=" << rep.sa.split.h0_dim << " h1=" << rep.sa.split.h1_dim()
     << " faithful=" << rep.sa.split.faithful()
     << " attractor_dim=" << rep.sa.attr.attractor_basis.size() << " blocks=";
  for (const auto& b : rep.sa.wolf.blocks)
    os << "(" << b.d1 << "," << b.d2 << ")";
  os << "\n";
  os << "peripherally_automorphic=" << rep.automorphy.peripherally_automorphic
     << " nstar_dim=" << rep.dfa.nstar_dim
     << " cesaro_residual=" << rep.cesaro_vs_spectral
     << " appendix_ok=" << rep.sa.eigvec_report.all_ok << "\n";
  return os.str();
}

} // namespace asymptotica
