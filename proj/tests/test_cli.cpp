#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "asymptotica/analysis.hpp"
#include "asymptotica/io.hpp"
#include "asymptotica/unfolder.hpp"

using namespace asymptotica;
namespace fs = std::filesystem;

#ifndef ASYM_CLI_PATH
#define ASYM_CLI_PATH "asymptotica"
#endif

namespace {

fs::path scratch_dir() {
  static fs::path dir = [] {
    fs::path p = fs::temp_directory_path() / "asymptotica_cli_tests";
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

int run_cli(const std::string& args, const std::string& stdout_file = "") {
  std::string cmd = std::string(ASYM_CLI_PATH) + " " + args;
  if (!stdout_file.empty()) cmd += " > " + stdout_file;
  cmd += " 2> /dev/null";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string write_file(const std::string& name, const std::string& text) {
  const fs::path p = scratch_dir() / name;
  std::ofstream out(p);
  out << text;
  return p.string();
}

std::vector<CMat> ad_kraus() {
  CMat k1(2, 2), k2(2, 2);
  k1 << 1, 0, 0, 0.5;
  k2 << 0, std::sqrt(3.0) / 2.0, 0, 0;
  return {k1, k2};
}

std::string ad_file(Picture pic) {
  const auto c = Channel::from_kraus(ad_kraus(), pic);
  return write_file(pic == Picture::Schrodinger ? "ad_schr.json"
                                                : "ad_heis.json",
                    dump_json17(channel_to_json(c, "kraus")));
}

Json strip_timings(Json j) {
  j.erase("timings");
  return j;
}

}  // namespace

TEST_CASE("channel JSON round trip in all three representations") {
  const auto c = random_ucp(3, 2, 5);
  for (const std::string repr : {"super", "choi", "kraus"}) {
    const Json j = channel_to_json(c, repr);
    const std::string text = dump_json17(j);
    const Channel back = channel_from_json(Json::parse(text));
    CHECK((back.superop() - c.superop()).norm() < 1e-10);
    CHECK(back.picture() == c.picture());
  }
}

TEST_CASE("17-digit float serialization round-trips exactly") {
  const double values[] = {1.0 / 3.0, std::sqrt(2.0), 0.1, 1e-300,
                           0.49999999999999994};
  for (double v : values) {
    const Json j = Json{{"x", v}};
    const Json back = Json::parse(dump_json17(j));
    CHECK(back["x"].get<double>() == v);
  }
}

TEST_CASE("unfold spec JSON round trip") {
  const auto spec = random_unfold_spec(6, 99);
  const std::string text = dump_json17(unfold_spec_to_json(spec));
  const UnfoldSpec back = unfold_spec_from_json(Json::parse(text));
  CHECK(back.blocks.size() == spec.blocks.size());
  CHECK(back.permutation == spec.permutation);
  CHECK(back.h1_dim == spec.h1_dim);
  for (std::size_t k = 0; k < spec.unitaries.size(); ++k)
    CHECK((back.unitaries[k] - spec.unitaries[k]).norm() < 1e-15);
  if (spec.h1_dim > 0)
    CHECK((back.transient_map - spec.transient_map).norm() < 1e-15);
  // The synthesized channels coincide.
  const auto c1 = unfold(spec, {}, false).channel;
  const auto c2 = unfold(back, {}, false).channel;
  CHECK((c1.superop() - c2.superop()).norm() < 1e-12);
}

TEST_CASE("ground truth sidecar round trip") {
  const auto res = unfold(random_unfold_spec(6, 7));
  const std::string text = dump_json17(ground_truth_to_json(res.truth));
  const GroundTruth back = ground_truth_from_json(Json::parse(text));
  CHECK((back.p_p - res.truth.p_p).norm() < 1e-12);
  CHECK(back.attr_basis.size() == res.truth.attr_basis.size());
}

TEST_CASE("cli analyze amplitude damping reproduces the known structure") {
  const std::string in = ad_file(Picture::Schrodinger);
  const std::string out = (scratch_dir() / "ad_report.json").string();
  REQUIRE(run_cli("analyze " + in + " --out " + out) == 0);
  const Json rep = read_json_file(out);
  CHECK(rep["structure"]["h0_dim"] == 1);
  CHECK(rep["structure"]["h1_dim"] == 1);
  CHECK(rep["structure"]["attractor_dim"] == 1);
  CHECK(rep["choi_effros"]["peripherally_automorphic"] == true);
  CHECK(rep["choi_effros"]["nstar_dim"] == 2);
  CHECK(rep["properties"]["trace_preserving"] == true);
  CHECK(rep["properties"]["unital"] == false);
  CHECK(rep["properties"]["cp"] == true);
  // Peripheral spectrum = {1}.
  int peripheral = 0;
  for (const auto& item : rep["spectrum"])
    if (item["peripheral"].get<bool>()) {
      ++peripheral;
      CHECK(std::abs(complex_from_json(item["lambda"]) - Complex(1.0)) <
            1e-8);
    }
  CHECK(peripheral == 1);
  CHECK(rep["appendix"]["all_ok"] == true);
}

TEST_CASE("cli analyze identity channel: faithful, attractor = everything") {
  const auto id = Channel::from_kraus({cidentity(2)}, Picture::Schrodinger);
  const std::string in =
      write_file("identity.json", dump_json17(channel_to_json(id, "super")));
  const std::string out = (scratch_dir() / "id_report.json").string();
  REQUIRE(run_cli("analyze " + in + " --out " + out) == 0);
  const Json rep = read_json_file(out);
  CHECK(rep["structure"]["faithful"] == true);
  CHECK(rep["structure"]["attractor_dim"] == 4);
  CHECK(rep["choi_effros"]["nstar_dim"] ==
        rep["choi_effros"]["attr_dim"]);
}

TEST_CASE("cli reports are deterministic given input, seed and tolerances") {
  const auto c = random_ucp(3, 2, 11);
  const std::string in =
      write_file("det.json", dump_json17(channel_to_json(c, "super")));
  const std::string out1 = (scratch_dir() / "det1.json").string();
  const std::string out2 = (scratch_dir() / "det2.json").string();
  REQUIRE(run_cli("analyze " + in + " --seed 7 --out " + out1) == 0);
  REQUIRE(run_cli("analyze " + in + " --seed 7 --out " + out2) == 0);
  const Json a = strip_timings(read_json_file(out1));
  const Json b = strip_timings(read_json_file(out2));
  CHECK(a == b);
}

TEST_CASE("cli: malformed input exits 2") {
  const std::string bad = write_file("bad.json", "{ not json");
  CHECK(run_cli("analyze " + bad) == 2);
  const std::string wrong =
      write_file("wrong.json", "{\"dim\": 2, \"repr\": \"super\"}");
  CHECK(run_cli("analyze " + wrong) == 2);
  // Well-formed file that is not a unital channel pair in any picture.
  CMat s = CMat::Zero(4, 4);
  s(0, 0) = 0.5;
  const std::string nonunital = write_file(
      "nonunital.json",
      dump_json17(channel_to_json(
          Channel::from_superop(s, Picture::Heisenberg), "super")));
  CHECK(run_cli("analyze " + nonunital) == 2);
}

TEST_CASE("cli synthesize: trivial spec yields the identity channel") {
  UnfoldSpec spec;
  spec.blocks = {{3, 1}};
  spec.h1_dim = 0;
  spec.permutation = {0};
  spec.unitaries = {cidentity(3)};
  const std::string in =
      write_file("trivial_spec.json", dump_json17(unfold_spec_to_json(spec)));
  const std::string out = (scratch_dir() / "trivial_channel.json").string();
  REQUIRE(run_cli("synthesize " + in + " --out " + out) == 0);
  const Channel c = channel_from_json(read_json_file(out));
  CHECK((c.superop() - cidentity(9)).norm() < 1e-12);
  CHECK(fs::exists(out + ".truth.json"));
}

TEST_CASE("cli synthesize: invalid spec exits 2") {
  const std::string in = write_file(
      "bad_spec.json",
      R"({"blocks": [{"d1": 2, "d2": 1}, {"d1": 1, "d2": 1}],
          "h1_dim": 0, "perm": [1, 0],
          "unitaries": [[[[1,0],[0,0]],[[0,0],[1,0]]], [[[1,0]]]]})");
  const std::string out = (scratch_dir() / "never.json").string();
  CHECK(run_cli("synthesize " + in + " --out " + out) == 2);
}

TEST_CASE("cli roundtrip on a spec file, and the corrupted-sidecar control") {
  const auto spec = random_unfold_spec(5, 31);
  const std::string in =
      write_file("rt_spec.json", dump_json17(unfold_spec_to_json(spec)));
  REQUIRE(run_cli("roundtrip " + in) == 0);

  // Corrupt the declared peripheral projection in the sidecar.
  const std::string chan = (scratch_dir() / "rt_chan.json").string();
  REQUIRE(run_cli("synthesize " + in + " --out " + chan) == 0);
  Json truth = read_json_file(chan + ".truth.json");
  truth["p_p"][0][0][0] = truth["p_p"][0][0][0].get<double>() + 0.125;
  const std::string bad_truth =
      write_file("rt_truth_bad.json", dump_json17(truth));
  CHECK(run_cli("roundtrip " + in + " --truth " + bad_truth) == 3);
}

TEST_CASE("cli roundtrip --random with parallel jobs") {
  CHECK(run_cli("roundtrip --random 4 --dmax 5 --seed 3 --jobs 2") == 0);
}

TEST_CASE("cli spectrum fragment") {
  const std::string in = ad_file(Picture::Heisenberg);
  const std::string out = (scratch_dir() / "spec_frag.json").string();
  REQUIRE(run_cli("spectrum " + in + " --out " + out) == 0);
  const Json frag = read_json_file(out);
  REQUIRE(frag.contains("spectrum"));
  std::vector<double> moduli;
  for (const auto& item : frag["spectrum"])
    for (std::size_t k = 0; k < item["multiplicity"].get<std::size_t>(); ++k)
      moduli.push_back(item["modulus"].get<double>());
  std::sort(moduli.begin(), moduli.end());
  REQUIRE(moduli.size() == 4);
  CHECK(moduli[0] == Catch::Approx(0.25));
  CHECK(moduli[1] == Catch::Approx(0.5));
  CHECK(moduli[2] == Catch::Approx(0.5));
  CHECK(moduli[3] == Catch::Approx(1.0));
}

TEST_CASE("cli honors ASYMPTOTICA_SEED as a fallback") {
  const auto c = random_ucp(2, 2, 13);
  const std::string in =
      write_file("seed_env.json", dump_json17(channel_to_json(c, "super")));
  const std::string out = (scratch_dir() / "seed_env_report.json").string();
  setenv("ASYMPTOTICA_SEED", "4242", 1);
  REQUIRE(run_cli("analyze " + in + " --out " + out) == 0);
  unsetenv("ASYMPTOTICA_SEED");
  const Json rep = read_json_file(out);
  CHECK(rep["seed"].get<std::uint64_t>() == 4242);
}

TEST_CASE("cli tolerance flags reach the report") {
  const auto c = random_ucp(2, 2, 17);
  const std::string in =
      write_file("tolflag.json", dump_json17(channel_to_json(c, "super")));
  const std::string out = (scratch_dir() / "tolflag_report.json").string();
  REQUIRE(run_cli("analyze " + in + " --eps-alg 1e-6 --out " + out) == 0);
  const Json rep = read_json_file(out);
  CHECK(rep["tolerances"]["eps_alg"].get<double>() == 1e-6);
}
