// End-to-end checks of the installed command line tool: every subcommand is
// exercised through a real process, and artifacts are validated by reading
// them back through the library's own parsers.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "ectrl/analysis.hpp"
#include "ectrl/controller.hpp"
#include "ectrl/serialize.hpp"
#include "support.hpp"

using namespace ectrl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("ectrl-cli-" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) { return read_text_file(path.string()); }

CliRun run_cli(const std::string& args, const fs::path& dir) {
  fs::path out_path = dir / "stdout.txt";
  fs::path err_path = dir / "stderr.txt";
  std::string cmd = std::string(ECTRL_CLI_PATH) + " " + args + " > " +
                    out_path.string() + " 2> " + err_path.string();
  int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  return fields;
}

// column index of a named header field
std::size_t csv_column(const std::string& header, const std::string& name) {
  auto fields = csv_fields(header);
  for (std::size_t i = 0; i < fields.size(); ++i)
    if (fields[i] == name) return i;
  REQUIRE_MESSAGE(false, ("no column " + name + " in " + header));
  return 0;
}

}  // namespace

TEST_CASE("keygen writes a decryption-capable key file") {
  fs::path dir = scratch_dir("keygen");
  fs::path key_path = dir / "key.json";

  auto r = run_cli("keygen --bits 512 --seed 7 --out " + key_path.string(), dir);
  REQUIRE(r.exit_code == 0);
  json summary = json::parse(r.out);
  CHECK(summary["out"] == key_path.string());
  CHECK(summary["key_bits"] == 512);

  auto [pk, sk] = key_from_json(slurp(key_path));
  REQUIRE(sk.has_value());
  CHECK(Bigint(pk.kappa_p_sq) == Bigint(pk.kappa_p * pk.kappa_p));

  // same seed, same key
  fs::path again = dir / "key2.json";
  run_cli("keygen --bits 512 --seed 7 --out " + again.string(), dir);
  CHECK(slurp(key_path) == slurp(again));

  SUBCASE("public-only omits the private half") {
    fs::path pub = dir / "pub.json";
    auto rp = run_cli("keygen --bits 512 --seed 7 --public-only --out " + pub.string(), dir);
    REQUIRE(rp.exit_code == 0);
    auto [pk2, sk2] = key_from_json(slurp(pub));
    CHECK(Bigint(pk2.kappa_p) == Bigint(pk.kappa_p));
    CHECK_FALSE(sk2.has_value());
  }
}

TEST_CASE("simulate is deterministic, settles, and honors overrides") {
  fs::path dir = scratch_dir("simulate");
  fs::path a = dir / "a.csv", b = dir / "b.csv";

  auto ra = run_cli("simulate --seed 11 --out " + a.string(), dir);
  REQUIRE(ra.exit_code == 0);
  json summary = json::parse(ra.out);
  CHECK(summary["rows"] == 1000);
  CHECK(summary["any_overflow"] == false);

  auto rb = run_cli("simulate --seed 11 --out " + b.string(), dir);
  REQUIRE(rb.exit_code == 0);
  CHECK(slurp(a) == slurp(b));  // byte-identical reruns

  auto lines = csv_lines(slurp(a));
  REQUIRE(lines.size() == 1001);  // header + 1000 steps
  std::size_t norm_col = csv_column(lines[0], "norm_x");
  double final_norm = std::stod(csv_fields(lines.back())[norm_col]);
  CHECK(final_norm < 0.5);

  SUBCASE("horizon flag limits the trace") {
    fs::path c = dir / "c.csv";
    run_cli("simulate --horizon 5 --out " + c.string(), dir);
    CHECK(csv_lines(slurp(c)).size() == 6);
  }

  SUBCASE("encrypted realization is reproducible end to end") {
    fs::path e1 = dir / "e1.csv", e2 = dir / "e2.csv";
    std::string common =
        "simulate --controller paper-eq32 --realization encrypted --horizon 25 "
        "--key-bits 512 --seed 3 --out ";
    auto re1 = run_cli(common + e1.string(), dir);
    REQUIRE(re1.exit_code == 0);
    auto re2 = run_cli(common + e2.string(), dir);
    REQUIRE(re2.exit_code == 0);
    CHECK(slurp(e1) == slurp(e2));
    CHECK(json::parse(re1.out)["any_overflow"] == false);
  }
}

TEST_CASE("analyze reports a valid certificate and both horizon conventions") {
  fs::path dir = scratch_dir("analyze");
  fs::path report_path = dir / "report.json";
  fs::path cert_path = dir / "cert.json";

  auto r = run_cli("analyze --certificate-out " + cert_path.string() + " --out " +
                       report_path.string(),
                   dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);

  json report = json::parse(slurp(report_path));
  CHECK(report["certificate_valid"] == true);
  CHECK(report["rho_F"].get<double>() < 1.0);
  CHECK(report["lifted_spectral_radius"].get<double>() < 1.0);
  CHECK(report["certificate"]["mu"].get<double>() < 0.0);
  CHECK(report["certificate"]["delta"].get<double>() >= 1.0);

  // the certificate's own T is the exponent-(T-1) horizon; the reporting
  // convention uses exponent T and can only be sooner
  int t_cert = report["certificate"]["T"].get<int>();
  CHECK(report["min_horizon_certificate_form"].get<int>() == t_cert);
  CHECK(report["min_horizon_reporting_form"].get<int>() <= t_cert);

  double bound = report["word_length_bound"].get<double>();
  CHECK(bound >= 10.0);
  CHECK(bound <= 40.0);

  // written certificate round-trips through the library parser
  StabilityCertificate cert = certificate_from_json(slurp(cert_path));
  CHECK(cert.T == t_cert);
}

TEST_CASE("verify-certificate distinguishes valid from broken certificates") {
  fs::path dir = scratch_dir("verify");
  fs::path cert_path = dir / "cert.json";
  REQUIRE(run_cli("analyze --certificate-out " + cert_path.string() + " --out " +
                      (dir / "report.json").string(),
                  dir)
              .exit_code == 0);

  auto good = run_cli("verify-certificate --certificate " + cert_path.string(), dir);
  CHECK(good.exit_code == 0);
  CHECK(json::parse(good.out)["all"] == true);

  // sabotage the contraction rate: no P satisfies a decay this steep
  json cert = json::parse(slurp(cert_path));
  cert["mu"] = -0.9;
  fs::path bad_path = dir / "bad.json";
  write_text_file(bad_path.string(), cert.dump());
  auto bad = run_cli("verify-certificate --certificate " + bad_path.string(), dir);
  CHECK(bad.exit_code == 2);
  json verdict = json::parse(bad.out);
  CHECK(verdict["all"] == false);
  CHECK(verdict["contraction"] == false);

  auto missing = run_cli("verify-certificate --certificate " + (dir / "nope.json").string(), dir);
  CHECK(missing.exit_code == 1);
  CHECK(json::parse(missing.err)["error"] == "io");
}

TEST_CASE("synthesize and reconstruct close the loop on the double integrator") {
  fs::path dir = scratch_dir("synth");
  fs::path plant_path = dir / "plant.json";
  write_text_file(plant_path.string(), plant_to_json(ectrl_test::double_integrator()));

  fs::path nu_path = dir / "nu.json";
  auto rs = run_cli("synthesize --plant " + plant_path.string() +
                        " --mu -0.5 --delta-lo 1 --delta-hi 200 --delta-tol 25 "
                        "--iterations 4000 --restarts 2 --out " +
                        nu_path.string(),
                    dir);
  REQUIRE_MESSAGE(rs.exit_code == 0, rs.err);
  json synth = json::parse(rs.out);
  REQUIRE(synth["feasible"] == true);
  CHECK(synth["mu"].get<double>() == doctest::Approx(-0.5));
  CHECK(synth["delta"].get<double>() <= 200.0);

  fs::path ctrl_path = dir / "controller.json";
  auto rr = run_cli("reconstruct --plant " + plant_path.string() + " --nu " +
                        nu_path.string() + " --T 5 --out " + ctrl_path.string(),
                    dir);
  REQUIRE_MESSAGE(rr.exit_code == 0, rr.err);
  CHECK(json::parse(rr.out)["rho_F"].get<double>() < 1.0);

  ControllerRealization ctrl = controller_from_json(slurp(ctrl_path));
  CHECK(ctrl.T == 5);
  PlantModel plant = ectrl_test::double_integrator();
  ctrl.validate(&plant);
  CHECK(spectral_radius(build_closed_loop(plant, ctrl).F) < 1.0);
}

TEST_CASE("demo-overflow contrasts the resetting and non-resetting loops") {
  fs::path dir = scratch_dir("overflow");
  fs::path reset_path = dir / "reset.csv", drift_path = dir / "drift.csv";

  auto r = run_cli("demo-overflow --controller paper-eq32 --ring-bits 2014 "
                   "--horizon 1000 --resetting-out " +
                       reset_path.string() + " --nonresetting-out " + drift_path.string(),
                   dir);
  REQUIRE_MESSAGE(r.exit_code == 0, r.err);
  json summary = json::parse(r.out);
  CHECK(summary["nonresetting"]["diverged"] == true);
  CHECK(summary["resetting"]["any_overflow"] == false);
  CHECK(summary["resetting"]["max_norm_x"].get<double>() <
        summary["nonresetting"]["max_norm_x"].get<double>());

  auto reset_lines = csv_lines(slurp(reset_path));
  auto drift_lines = csv_lines(slurp(drift_path));
  REQUIRE(reset_lines.size() == 1001);
  REQUIRE(drift_lines.size() == 1001);
  CHECK(reset_lines[0] == drift_lines[0]);  // identical schemas
}

TEST_CASE("netdemo loopback runs a full encrypted session") {
  fs::path dir = scratch_dir("netdemo");
  fs::path trace_a = dir / "a.csv", trace_b = dir / "b.csv";
  fs::path cloud_log = dir / "cloud.log";

  std::string common =
      "netdemo --role loopback --controller paper-eq32 --key-bits 512 --seed 21 "
      "--horizon 20 --cloud-transcript " +
      cloud_log.string() + " --out ";
  auto ra = run_cli(common + trace_a.string(), dir);
  REQUIRE_MESSAGE(ra.exit_code == 0, ra.err);
  json summary = json::parse(ra.out);
  CHECK(summary["rows"] == 20);
  CHECK(summary["any_overflow"] == false);

  std::string log = slurp(cloud_log);
  CHECK(log.find("recv type=1") != std::string::npos);  // hello reached the cloud
  CHECK(log.find("send type=4") != std::string::npos);  // control data flowed back

  auto rb = run_cli(common + trace_b.string(), dir);
  REQUIRE(rb.exit_code == 0);
  CHECK(slurp(trace_a) == slurp(trace_b));
}

TEST_CASE("configuration errors produce machine-readable JSON on stderr") {
  fs::path dir = scratch_dir("errors");

  auto missing = run_cli("simulate --config " + (dir / "absent.json").string(), dir);
  CHECK(missing.exit_code == 1);
  CHECK(json::parse(missing.err)["error"] == "io");

  fs::path typo = dir / "typo.json";
  write_text_file(typo.string(), R"({"horizonn": 5})");
  auto unknown = run_cli("simulate --config " + typo.string(), dir);
  CHECK(unknown.exit_code == 1);
  json err = json::parse(unknown.err);
  CHECK(err["error"] == "config");
  CHECK(err["message"].get<std::string>().find("horizonn") != std::string::npos);

  auto bad_realization = run_cli("simulate --realization florp --out -", dir);
  CHECK(bad_realization.exit_code == 1);
  CHECK(json::parse(bad_realization.err)["error"] == "invalid_argument");

  auto bad_ring = run_cli("simulate --ring-bits many --out -", dir);
  CHECK(bad_ring.exit_code == 1);
  CHECK(json::parse(bad_ring.err)["error"] == "config");

  auto bad_flag = run_cli("simulate --no-such-flag", dir);
  CHECK(bad_flag.exit_code == 1);
  CHECK(json::parse(bad_flag.err)["error"] == "config");
}

TEST_CASE("config file values apply and flags override them") {
  fs::path dir = scratch_dir("config");
  fs::path cfg_path = dir / "run.json";
  write_text_file(cfg_path.string(),
                  R"({"controller": "paper-eq32", "horizon": 10, "seed": 5})");

  fs::path a = dir / "a.csv";
  auto ra = run_cli("simulate --config " + cfg_path.string() + " --out " + a.string(), dir);
  REQUIRE_MESSAGE(ra.exit_code == 0, ra.err);
  CHECK(csv_lines(slurp(a)).size() == 11);  // config horizon applied

  fs::path b = dir / "b.csv";
  auto rb = run_cli("simulate --config " + cfg_path.string() + " --horizon 4 --out " +
                        b.string(),
                    dir);
  REQUIRE(rb.exit_code == 0);
  CHECK(csv_lines(slurp(b)).size() == 5);  // flag wins over config
}
