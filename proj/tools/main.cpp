// asymptotica: analyze the asymptotic (peripheral) structure of
// finite-dimensional quantum channels in the Heisenberg picture, synthesize
// channels with prescribed asymptotics, and verify synthesize->analyze round
// trips. Reports are JSON on stdout (or --out); a short human summary goes
// to stderr.
//
// Exit codes: 0 success, 2 malformed input or invalid spec, 3 structural
// violation or roundtrip mismatch, 1 unexpected error.

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "asymptotica/analysis.hpp"
#include "asymptotica/io.hpp"
#include "asymptotica/roundtrip.hpp"

namespace {

using namespace asymptotica;

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ASYMPTOTICA_SEED"))
    return std::strtoull(env, nullptr, 10);
  return 0;
}

struct CommonOpts {
  std::uint64_t seed = default_seed();
  Tolerances tol;
  std::string config_path;

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "RNG seed (fallback: ASYMPTOTICA_SEED)");
    app->add_option("--config", config_path,
                    "JSON file with tolerance overrides");
    app->add_option("--eps-mat", tol.eps_mat, "element-level tolerance");
    app->add_option("--eps-eig", tol.eps_eig, "eigen-residual tolerance");
    app->add_option("--eps-cluster", tol.eps_cluster,
                    "eigenvalue clustering tolerance");
    app->add_option("--eps-per", tol.eps_per, "peripheral threshold");
    app->add_option("--eps-supp", tol.eps_supp, "support cutoff");
    app->add_option("--eps-faith", tol.eps_faith, "faithfulness floor");
    app->add_option("--eps-alg", tol.eps_alg, "algebra-level tolerance");
  }

  void load_config() {
    if (config_path.empty()) return;
    const Json j = read_json_file(config_path);
    auto get = [&](const char* key, double& slot) {
      if (j.contains(key)) slot = j[key].get<double>();
    };
    get("eps_mat", tol.eps_mat);
    get("eps_eig", tol.eps_eig);
    get("eps_cluster", tol.eps_cluster);
    get("eps_per", tol.eps_per);
    get("eps_supp", tol.eps_supp);
    get("eps_faith", tol.eps_faith);
    get("eps_alg", tol.eps_alg);
    if (j.contains("seed")) seed = j["seed"].get<std::uint64_t>();
  }
};

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_text_file(out_path, text);
}

int cmd_analyze(const std::string& path, const std::string& out_path,
                const CommonOpts& common, bool spectrum_only) {
  const Json j = read_json_file(path);
  const Channel input = channel_from_json(j, common.tol);
  if (spectrum_only) {
    const Channel heis = input.picture() == Picture::Heisenberg
                             ? input
                             : input.adjoint();
    const auto sd = spectrum(heis, common.tol);
    Json out;
    out["input"] = Json{{"digest", file_digest(path)},
                        {"dim", input.dim()},
                        {"picture", picture_name(input.picture())}};
    out["spectrum"] = spectrum_fragment(sd, common.tol);
    emit(dump_json17(out), out_path);
    return 0;
  }
  AnalysisOptions opts;
  opts.seed = common.seed;
  opts.tol = common.tol;
  const auto rep = run_analysis(input, opts, file_digest(path));
  emit(dump_json17(report_to_json(rep)), out_path);
  std::cerr << report_summary(rep);
  return 0;
}

int cmd_synthesize(const std::string& spec_path, const std::string& out_path,
                   const CommonOpts& common) {
  const UnfoldSpec spec = unfold_spec_from_json(read_json_file(spec_path));
  const auto res = unfold(spec, common.tol);
  emit(dump_json17(channel_to_json(res.channel, "super")), out_path);
  if (!out_path.empty())
    write_text_file(out_path + ".truth.json",
                    dump_json17(ground_truth_to_json(res.truth)));
  std::cerr << "synthesized d=" << res.channel.dim() << " channel ("
            << spec.block_count() << " blocks, h1=" << spec.h1_dim << ")\n";
  return 0;
}

int run_one_roundtrip(const UnfoldSpec& spec, const GroundTruth* truth_override,
                      const CommonOpts& common, std::uint64_t analysis_seed,
                      RoundtripReport& out) {
  const auto res = unfold(spec, common.tol);
  const GroundTruth& truth = truth_override ? *truth_override : res.truth;
  const auto sa = analyze_structure(res.channel, analysis_seed, common.tol);
  out = compare_roundtrip(truth, sa);
  return out.pass ? 0 : 3;
}

int cmd_roundtrip(const std::string& spec_path, const std::string& truth_path,
                  int random_count, int dmax, int jobs,
                  const CommonOpts& common) {
  std::vector<UnfoldSpec> specs;
  GroundTruth truth_file;
  const GroundTruth* truth_override = nullptr;
  if (!spec_path.empty()) {
    specs.push_back(unfold_spec_from_json(read_json_file(spec_path)));
    if (!truth_path.empty()) {
      truth_file = ground_truth_from_json(read_json_file(truth_path));
      truth_override = &truth_file;
    }
  } else {
    for (int i = 0; i < random_count; ++i)
      specs.push_back(random_unfold_spec(
          dmax, common.seed * 1000003ull + static_cast<std::uint64_t>(i)));
  }

  std::vector<RoundtripReport> reports(specs.size());
  std::vector<std::string> errors(specs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      try {
        run_one_roundtrip(specs[i], truth_override, common,
                          common.seed + 7919 * (i + 1), reports[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int n_threads =
      std::max(1, std::min<int>(jobs, static_cast<int>(specs.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  bool all_pass = true;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (!errors[i].empty()) {
      all_pass = false;
      std::cout << "item " << i << ": ERROR " << errors[i] << "\n";
      continue;
    }
    const auto& rep = reports[i];
    all_pass = all_pass && rep.pass;
    std::cout << "item " << i << ": " << (rep.pass ? "PASS" : "FAIL");
    if (!rep.pass) {
      for (const auto& it : rep.items)
        if (!it.pass)
          std::cout << " [" << it.name << " " << it.value << " > " << it.budget
                    << "]";
    } else {
      double worst = 0;
      for (const auto& it : rep.items) worst = std::max(worst, it.value);
      std::cout << " worst_margin=" << worst;
    }
    std::cout << "\n";
  }
  std::cout << (all_pass ? "roundtrip: all items passed"
                         : "roundtrip: MISMATCH")
            << " (" << specs.size() << " items)\n";
  return all_pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "asymptotica: attractor subspaces, peripheral projections and "
      "Choi-Effros structure of quantum channels"};
  app.require_subcommand(1);

  CommonOpts common;

  std::string in_path, out_path, truth_path;
  int random_count = 0, dmax = 6, jobs = 1;

  auto* analyze = app.add_subcommand("analyze", "full structure analysis");
  analyze->add_option("file", in_path, "channel JSON file")->required();
  analyze->add_option("--out", out_path, "write the report here");
  common.attach(analyze);

  auto* spectrum_cmd =
      app.add_subcommand("spectrum", "spectrum fragment only");
  spectrum_cmd->add_option("file", in_path, "channel JSON file")->required();
  spectrum_cmd->add_option("--out", out_path, "write the fragment here");
  common.attach(spectrum_cmd);

  auto* synthesize =
      app.add_subcommand("synthesize", "unfold a spec into a channel");
  synthesize->add_option("spec", in_path, "unfold spec JSON file")->required();
  synthesize->add_option("--out", out_path, "channel output path")->required();
  common.attach(synthesize);

  auto* roundtrip = app.add_subcommand(
      "roundtrip", "synthesize, analyze and compare against ground truth");
  roundtrip->add_option("spec", in_path, "unfold spec JSON file");
  roundtrip->add_option("--truth", truth_path,
                        "compare against this sidecar instead of the "
                        "freshly synthesized one");
  roundtrip->add_option("--random", random_count,
                        "number of random specs to generate");
  roundtrip->add_option("--dmax", dmax, "max Hilbert dimension for --random");
  roundtrip->add_option("--jobs", jobs, "parallel workers");
  common.attach(roundtrip);

  CLI11_PARSE(app, argc, argv);

  try {
    common.load_config();
    if (analyze->parsed())
      return cmd_analyze(in_path, out_path, common, false);
    if (spectrum_cmd->parsed())
      return cmd_analyze(in_path, out_path, common, true);
    if (synthesize->parsed())
      return cmd_synthesize(in_path, out_path, common);
    if (roundtrip->parsed()) {
      if (in_path.empty() && random_count <= 0) {
        std::cerr << "roundtrip: give a spec file or --random N\n";
        return 2;
      }
      return cmd_roundtrip(in_path, truth_path, random_count, dmax, jobs,
                           common);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    // Structural violations: the failing invariant is in the message.
    std::cerr << "structural violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
