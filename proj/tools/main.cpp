// ectrl — command line front end for the encrypted resetting-controller
// library: key generation, closed-loop simulation traces, Lyapunov analysis
// reports, certificate verification, LMI synthesis, the overflow
// demonstration, and the networked three-role demo.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ectrl/analysis.hpp"
#include "ectrl/controller.hpp"
#include "ectrl/error.hpp"
#include "ectrl/fixed_point.hpp"
#include "ectrl/linalg.hpp"
#include "ectrl/netdemo.hpp"
#include "ectrl/paillier.hpp"
#include "ectrl/plant.hpp"
#include "ectrl/rng.hpp"
#include "ectrl/serialize.hpp"
#include "ectrl/synthesis.hpp"

using namespace ectrl;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// controller presets
//
// The two published case-study controllers for the batch reactor, entries
// exactly as printed (two decimals). paper-eq31 is the slow-reset design
// (T = 25), paper-eq32 the fast-reset design (T = 8).

ControllerRealization preset_eq31() {
  ControllerRealization c;
  c.A = Matrix{{0.26, -0.03, -0.29, 0.31},
               {-0.32, 1.24, 1.40, -3.05},
               {-0.45, 0.02, 0.87, -0.75},
               {-0.05, -0.04, 0.72, -0.51}};
  c.B = Matrix{{-0.52, -0.03}, {5.46, 1.25}, {2.32, -0.01}, {2.28, -0.08}};
  c.C = Matrix{{1.02, -2.65, -2.65, 6.28}};
  c.D = Matrix{{-11.3, -4.09}};
  c.T = 25;
  return c;
}

ControllerRealization preset_eq32() {
  ControllerRealization c;
  c.A = Matrix{{-0.18, -0.01, -0.77, 0.84},
               {9.17, 0.43, 13.4, -16.2},
               {1.24, 0.10, 3.82, -4.22},
               {1.32, 0.10, 3.47, -3.87}};
  c.B = Matrix{{-1.11, -0.01}, {22.8, 0.42}, {7.81, 0.06}, {7.89, 0.06}};
  c.C = Matrix{{-19.6, -0.93, -28.8, 34.9}};
  c.D = Matrix{{-49.0, -2.33}};
  c.T = 8;
  return c;
}

// ---------------------------------------------------------------------------
// run configuration

struct RunConfig {
  std::string plant = "batch-reactor";
  std::string controller = "paper-eq31";
  int n = 24;
  int m = 14;
  int T = 0;  // 0 keeps the controller's own reset period
  std::string ring_bits = "auto";
  int key_bits = 512;
  std::string key_file;
  std::uint64_t seed = 2024;
  long horizon = 1000;
  std::string realization = "quantized";
  std::string out = "-";
};

void apply_config_file(const std::string& path, RunConfig& cfg) {
  json j = json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded()) fail("config", "malformed JSON config file: " + path);
  if (!j.is_object()) fail("config", "config file must hold a JSON object");
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "plant") {
        cfg.plant = value.get<std::string>();
      } else if (key == "controller") {
        cfg.controller = value.get<std::string>();
      } else if (key == "n") {
        cfg.n = value.get<int>();
      } else if (key == "m") {
        cfg.m = value.get<int>();
      } else if (key == "T") {
        cfg.T = value.get<int>();
      } else if (key == "ring_bits") {
        cfg.ring_bits = value.is_number() ? std::to_string(value.get<long>())
                                          : value.get<std::string>();
      } else if (key == "key_bits") {
        cfg.key_bits = value.get<int>();
      } else if (key == "key_file") {
        cfg.key_file = value.get<std::string>();
      } else if (key == "seed") {
        cfg.seed = value.get<std::uint64_t>();
      } else if (key == "horizon") {
        cfg.horizon = value.get<long>();
      } else if (key == "realization") {
        cfg.realization = value.get<std::string>();
      } else if (key == "out") {
        cfg.out = value.get<std::string>();
      } else {
        fail("config", "unknown config key: " + key);
      }
    }
  } catch (const json::exception& e) {
    fail("config", std::string("invalid config value: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// sources and sinks

PlantModel load_plant(const std::string& src) {
  if (src == "batch-reactor") return batch_reactor();
  return plant_from_json(read_text_file(src));
}

ControllerRealization load_controller(const std::string& src) {
  if (src == "paper-eq31") return preset_eq31();
  if (src == "paper-eq32") return preset_eq32();
  return controller_from_json(read_text_file(src));
}

std::pair<PaillierPublicKey, std::optional<PaillierPrivateKey>> load_key(
    const std::string& path) {
  return key_from_json(read_text_file(path));
}

void write_artifact(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  write_text_file(path, content);
}

void emit(const json& j) { std::printf("%s\n", j.dump().c_str()); }

void warn(const std::string& message) {
  json j;
  j["warning"] = message;
  std::fprintf(stderr, "%s\n", j.dump().c_str());
}

int resolve_ring_bits(const RunConfig& cfg, const ControllerRealization& ctrl,
                      std::size_t plant_n_u) {
  if (cfg.ring_bits == "auto") {
    if (ctrl.T == ControllerRealization::kNonResetting) {
      fail("config",
           "ring_bits 'auto' needs a finite reset period; pass --ring-bits explicitly");
    }
    return ring_bits_lower_bound(ctrl.T, cfg.n, static_cast<int>(ctrl.n_c()),
                                 static_cast<int>(ctrl.n_y()),
                                 static_cast<int>(plant_n_u)) +
           2;
  }
  try {
    std::size_t used = 0;
    int bits = std::stoi(cfg.ring_bits, &used);
    if (used != cfg.ring_bits.size()) throw std::invalid_argument(cfg.ring_bits);
    return bits;
  } catch (const std::exception&) {
    fail("config", "ring_bits must be a positive integer or 'auto', got '" +
                       cfg.ring_bits + "'");
  }
}

Vector augmented_initial_state(const PlantModel& plant, std::size_t n_c) {
  Vector x0(plant.n_x() + n_c, 0.0);
  for (std::size_t i = 0; i < plant.x0.size(); ++i) x0[i] = plant.x0[i];
  return x0;
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_keygen(int bits, std::uint64_t seed, bool public_only, const std::string& out) {
  if (seed == 0) {
    std::random_device rd;
    seed = (static_cast<std::uint64_t>(rd()) << 32) | rd();
  }
  Rng rng(seed);
  auto [pk, sk] = keygen(static_cast<std::size_t>(bits), rng);
  write_artifact(out, key_to_json(pk, public_only ? nullptr : &sk));
  json summary;
  summary["out"] = out;
  summary["key_bits"] = bits;
  summary["public_only"] = public_only;
  if (out != "-") emit(summary);
  return 0;
}

int cmd_simulate(const RunConfig& cfg) {
  PlantModel plant = load_plant(cfg.plant);
  ControllerRealization ctrl = load_controller(cfg.controller);
  if (cfg.T > 0) ctrl.T = cfg.T;
  Realization realization = realization_from_string(cfg.realization);

  SessionParams session;
  session.format = FixedPointFormat{cfg.n, cfg.m};
  session.ring = IntegerRingParams{resolve_ring_bits(cfg, ctrl, plant.n_u())};
  session.T = realization == Realization::integer_nonresetting
                  ? ControllerRealization::kNonResetting
                  : ctrl.T;

  Rng rng(cfg.seed);
  PaillierPublicKey pk;
  PaillierPrivateKey sk;
  if (realization == Realization::encrypted) {
    if (!cfg.key_file.empty()) {
      auto [loaded_pk, loaded_sk] = load_key(cfg.key_file);
      if (!loaded_sk) {
        fail("config", "the encrypted realization needs both key halves; '" +
                           cfg.key_file + "' holds only the public half");
      }
      pk = loaded_pk;
      sk = *loaded_sk;
    } else {
      std::tie(pk, sk) = keygen(static_cast<std::size_t>(cfg.key_bits), rng);
    }
    session.public_key = &pk;
    session.private_key = &sk;
  }

  if (!session.validate(ctrl.n_c(), ctrl.n_y(), ctrl.n_u())) {
    warn("ring width " + std::to_string(session.ring.n_tilde) +
         " is below the growth-bound recommendation; values may wrap");
  }

  SimulationTrace trace =
      run_closed_loop(plant, ctrl, session, cfg.horizon, realization, &rng);
  write_artifact(cfg.out, trace.to_csv());
  if (cfg.out != "-") {
    json summary;
    summary["out"] = cfg.out;
    summary["rows"] = trace.rows.size();
    summary["any_overflow"] = trace.any_overflow;
    summary["final_norm_x"] = trace.rows.empty() ? 0.0 : trace.rows.back().norm_x;
    emit(summary);
  }
  return 0;
}

int cmd_analyze(const RunConfig& cfg, double eps_bar, double tol,
                const std::string& certificate_out) {
  PlantModel plant = load_plant(cfg.plant);
  ControllerRealization ctrl = load_controller(cfg.controller);
  if (cfg.T > 0) ctrl.T = cfg.T;

  ClosedLoopMatrix cl = build_closed_loop(plant, ctrl);
  auto cert = find_certificate(cl, default_mu_grid(), eps_bar);
  if (!cert) {
    fail("numeric", "no stability certificate found on the default contraction grid");
  }
  CertificateVerdict verdict = check_certificate(cl, *cert, tol);
  double bound = word_length_bound(cert->P, cert->eps_small, plant.C,
                                   augmented_initial_state(plant, ctrl.n_c()));

  json report;
  report["plant"] = cfg.plant;
  report["controller"] = cfg.controller;
  report["rho_F"] = spectral_radius(cl.F);
  report["certificate"]["mu"] = cert->mu;
  report["certificate"]["delta"] = cert->delta;
  report["certificate"]["eps_small"] = cert->eps_small;
  report["certificate"]["eps_bar"] = cert->eps_bar;
  report["certificate"]["T"] = cert->T;
  report["certificate_valid"] = verdict.all();
  report["margins"]["p"] = verdict.margin_p;
  report["margins"]["contraction"] = verdict.margin_contraction;
  report["margins"]["reset"] = verdict.margin_reset;
  report["margins"]["horizon_value"] = verdict.horizon_value;
  // the two equivalent horizon conventions: exponent T (reporting form)
  // and exponent T-1 (the certificate condition itself)
  report["min_horizon_reporting_form"] =
      min_reset_horizon(cert->delta, cert->mu, cert->eps_bar, 0);
  report["min_horizon_certificate_form"] =
      min_reset_horizon(cert->delta, cert->mu, cert->eps_bar, 1);
  report["word_length_bound"] = bound;
  report["lifted_spectral_radius"] = lifted_spectral_radius(cl, cert->T);

  if (!certificate_out.empty()) {
    write_artifact(certificate_out, certificate_to_json(*cert));
    report["certificate_out"] = certificate_out;
  }
  write_artifact(cfg.out, report.dump(2) + "\n");
  return 0;
}

int cmd_verify_certificate(const RunConfig& cfg, const std::string& cert_file,
                           double tol) {
  PlantModel plant = load_plant(cfg.plant);
  ControllerRealization ctrl = load_controller(cfg.controller);
  if (cfg.T > 0) ctrl.T = cfg.T;
  StabilityCertificate cert = certificate_from_json(read_text_file(cert_file));
  CertificateVerdict verdict = check_certificate(build_closed_loop(plant, ctrl), cert, tol);

  json report;
  report["p_positive"] = verdict.p_positive;
  report["contraction"] = verdict.contraction;
  report["reset_jump"] = verdict.reset_jump;
  report["horizon"] = verdict.horizon;
  report["margins"]["p"] = verdict.margin_p;
  report["margins"]["contraction"] = verdict.margin_contraction;
  report["margins"]["reset"] = verdict.margin_reset;
  report["margins"]["horizon_value"] = verdict.horizon_value;
  report["all"] = verdict.all();
  emit(report);
  return verdict.all() ? 0 : 2;
}

int cmd_synthesize(const RunConfig& cfg, std::vector<double> mu_grid, double delta_lo,
                   double delta_hi, double delta_tol, const SolverOptions& options) {
  PlantModel plant = load_plant(cfg.plant);
  if (mu_grid.empty()) mu_grid = default_mu_grid();
  FeasibilityResult result =
      feasibility_search(plant, mu_grid, delta_lo, delta_hi, delta_tol, options);

  json summary;
  summary["feasible"] = result.feasible;
  summary["iterations"] = result.iterations;
  if (!result.feasible) {
    emit(summary);
    return 4;
  }
  summary["mu"] = result.mu;
  summary["delta"] = result.delta;
  summary["out"] = cfg.out;
  write_artifact(cfg.out == "-" ? "-" : cfg.out, nu_to_json(result.nu));
  if (cfg.out != "-") emit(summary);
  return 0;
}

int cmd_reconstruct(const RunConfig& cfg, const std::string& nu_file, int T,
                    const std::string& p_out) {
  PlantModel plant = load_plant(cfg.plant);
  SynthesisVariables nu = nu_from_json(read_text_file(nu_file));
  ReconstructedController rec = reconstruct_controller(plant, nu);

  ControllerRealization ctrl;
  ctrl.A = rec.A_c;
  ctrl.B = rec.B_c;
  ctrl.C = rec.C_c;
  ctrl.D = rec.D_c;
  ctrl.T = T;
  ctrl.validate(&plant);
  write_artifact(cfg.out, controller_to_json(ctrl));
  if (!p_out.empty()) write_artifact(p_out, matrix_to_json(rec.P));

  json summary;
  summary["out"] = cfg.out;
  summary["rho_F"] = spectral_radius(build_closed_loop(plant, ctrl).F);
  if (!p_out.empty()) summary["p_out"] = p_out;
  if (cfg.out != "-") emit(summary);
  return 0;
}

int cmd_demo_overflow(const RunConfig& cfg, const std::string& resetting_out,
                      const std::string& nonresetting_out) {
  PlantModel plant = load_plant(cfg.plant);
  ControllerRealization ctrl = load_controller(cfg.controller);
  if (cfg.T > 0) ctrl.T = cfg.T;
  if (ctrl.T == ControllerRealization::kNonResetting) {
    fail("config", "demo-overflow needs a finite reset period for the resetting half");
  }
  int ring_bits = resolve_ring_bits(cfg, ctrl, plant.n_u());
  double x0_norm = norm2(plant.x0);

  SessionParams resetting_session;
  resetting_session.format = FixedPointFormat{cfg.n, cfg.m};
  resetting_session.ring = IntegerRingParams{ring_bits};
  resetting_session.T = ctrl.T;
  SimulationTrace resetting =
      run_closed_loop(plant, ctrl, resetting_session, cfg.horizon, Realization::integer);

  ControllerRealization unbounded = ctrl;
  unbounded.T = ControllerRealization::kNonResetting;
  SessionParams nonresetting_session = resetting_session;
  nonresetting_session.T = ControllerRealization::kNonResetting;
  SimulationTrace nonresetting = run_closed_loop(
      plant, unbounded, nonresetting_session, cfg.horizon, Realization::integer_nonresetting);

  write_artifact(resetting_out, resetting.to_csv());
  write_artifact(nonresetting_out, nonresetting.to_csv());

  auto max_norm = [](const SimulationTrace& t) {
    double worst = 0.0;
    for (const auto& row : t.rows) worst = std::max(worst, row.norm_x);
    return worst;
  };
  json summary;
  summary["resetting"]["out"] = resetting_out;
  summary["resetting"]["max_norm_x"] = max_norm(resetting);
  summary["resetting"]["any_overflow"] = resetting.any_overflow;
  summary["nonresetting"]["out"] = nonresetting_out;
  summary["nonresetting"]["max_norm_x"] = max_norm(nonresetting);
  summary["nonresetting"]["diverged"] = max_norm(nonresetting) > 10.0 * x0_norm;
  emit(summary);
  return 0;
}

struct NetdemoConfig {
  std::string role;
  std::string host = "127.0.0.1";
  int port = 0;
  int listen_port = 0;
  int timeout_ms = 30000;
  std::string session_id = "session-0";
  std::string transcript_out;
  std::string cloud_transcript_out;
};

int cmd_netdemo(const RunConfig& cfg, const NetdemoConfig& net) {
  ControllerRealization ctrl = load_controller(cfg.controller);
  if (cfg.T > 0) ctrl.T = cfg.T;
  PlantModel plant = load_plant(cfg.plant);
  int ring_bits = resolve_ring_bits(cfg, ctrl, plant.n_u());

  PaillierPublicKey pk;
  std::optional<PaillierPrivateKey> sk;
  Rng rng(cfg.seed);
  if (!cfg.key_file.empty()) {
    std::tie(pk, sk) = load_key(cfg.key_file);
  } else if (net.role == "loopback") {
    PaillierPrivateKey generated_sk;
    std::tie(pk, generated_sk) = keygen(static_cast<std::size_t>(cfg.key_bits), rng);
    sk = generated_sk;
  } else {
    fail("config", "netdemo roles 'cloud' and 'plant' need --key (shared key file)");
  }

  NetdemoOptions options;
  options.horizon = cfg.horizon;
  options.timeout_ms = net.timeout_ms;
  options.session_id = net.session_id;

  auto make_encrypted = [&]() {
    auto qc = quantize_controller(ctrl, FixedPointFormat{cfg.n, cfg.m});
    auto rc = ring_controller(qc, IntegerRingParams{ring_bits});
    return encrypted_controller(rc, pk);
  };
  auto make_session = [&]() {
    SessionParams session;
    session.format = FixedPointFormat{cfg.n, cfg.m};
    session.ring = IntegerRingParams{ring_bits};
    session.T = ctrl.T;
    session.public_key = &pk;
    session.private_key = sk ? &*sk : nullptr;
    return session;
  };

  if (net.role == "cloud") {
    EncryptedController ec = make_encrypted();
    int listen_fd = open_listener(net.listen_port);
    json ready;
    ready["listening"] = listener_port(listen_fd);
    emit(ready);
    std::fflush(stdout);
    Transcript transcript;
    run_cloud(listen_fd, ec, rng, options, &transcript);
    close_socket(listen_fd);
    if (!net.transcript_out.empty()) write_artifact(net.transcript_out, transcript.text);
    return 0;
  }

  if (net.role == "plant") {
    if (!sk) fail("config", "the plant role needs both key halves in --key");
    SessionParams session = make_session();
    Transcript transcript;
    SimulationTrace trace = run_plant_side(net.host, net.port, plant, ctrl.n_c(), session,
                                           rng, options, &transcript);
    write_artifact(cfg.out, trace.to_csv());
    if (!net.transcript_out.empty()) write_artifact(net.transcript_out, transcript.text);
    if (cfg.out != "-") {
      json summary;
      summary["out"] = cfg.out;
      summary["rows"] = trace.rows.size();
      summary["any_overflow"] = trace.any_overflow;
      emit(summary);
    }
    return 0;
  }

  if (net.role == "loopback") {
    EncryptedController ec = make_encrypted();
    SessionParams session = make_session();
    int listen_fd = open_listener(0);
    int port = listener_port(listen_fd);

    Transcript cloud_transcript;
    std::string cloud_error;
    Rng cloud_rng(cfg.seed + 1);
    std::thread cloud([&] {
      try {
        run_cloud(listen_fd, ec, cloud_rng, options, &cloud_transcript);
      } catch (const std::exception& e) {
        cloud_error = e.what();
      }
    });

    Transcript plant_transcript;
    SimulationTrace trace;
    try {
      trace = run_plant_side("127.0.0.1", port, plant, ctrl.n_c(), session, rng, options,
                             &plant_transcript);
    } catch (...) {
      cloud.join();
      close_socket(listen_fd);
      throw;
    }
    cloud.join();
    close_socket(listen_fd);
    if (!cloud_error.empty()) fail("protocol", "cloud role failed: " + cloud_error);

    write_artifact(cfg.out, trace.to_csv());
    if (!net.transcript_out.empty())
      write_artifact(net.transcript_out, plant_transcript.text);
    if (!net.cloud_transcript_out.empty())
      write_artifact(net.cloud_transcript_out, cloud_transcript.text);
    if (cfg.out != "-") {
      json summary;
      summary["out"] = cfg.out;
      summary["rows"] = trace.rows.size();
      summary["any_overflow"] = trace.any_overflow;
      emit(summary);
    }
    return 0;
  }

  fail("config", "netdemo role must be cloud, plant, or loopback, got '" + net.role + "'");
}

// ---------------------------------------------------------------------------
// option plumbing

void add_run_options(CLI::App* sub, RunConfig& cfg, bool with_controller = true) {
  sub->add_option("--config", "JSON file with run settings (flags override it)");
  sub->add_option("--plant", cfg.plant, "builtin plant name (batch-reactor) or JSON file")
      ->capture_default_str();
  if (with_controller) {
    sub->add_option("--controller", cfg.controller,
                    "controller JSON file or preset (paper-eq31, paper-eq32)")
        ->capture_default_str();
    sub->add_option("--T", cfg.T, "reset period override (0 keeps the controller's)")
        ->capture_default_str();
  }
}

void add_format_options(CLI::App* sub, RunConfig& cfg) {
  sub->add_option("--n", cfg.n, "fixed-point word length")->capture_default_str();
  sub->add_option("--m", cfg.m, "fixed-point fractional bits")->capture_default_str();
  sub->add_option("--ring-bits", cfg.ring_bits,
                  "integer ring width, or 'auto' for the growth bound plus 2")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  // resolve --config before CLI flags so explicit flags win
  try {
    for (int i = 1; i < argc; ++i) {
      std::string arg = argv[i];
      if (arg == "--config" && i + 1 < argc) {
        apply_config_file(argv[i + 1], cfg);
      } else if (arg.rfind("--config=", 0) == 0) {
        apply_config_file(arg.substr(9), cfg);
      }
    }
  } catch (const Error& e) {
    json err;
    err["error"] = e.code();
    err["message"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }

  CLI::App app{"encrypted resetting-controller toolkit"};
  app.require_subcommand(1);

  // keygen
  int kg_bits = 512;
  std::uint64_t kg_seed = 0;
  bool kg_public_only = false;
  std::string kg_out = "key.json";
  auto* keygen_cmd = app.add_subcommand("keygen", "generate a key pair as JSON");
  keygen_cmd->add_option("--bits", kg_bits, "modulus size in bits")->capture_default_str();
  keygen_cmd->add_option("--seed", kg_seed, "deterministic seed (0 draws a random one)")
      ->capture_default_str();
  keygen_cmd->add_flag("--public-only", kg_public_only, "omit the private half");
  keygen_cmd->add_option("--out", kg_out, "output path ('-' for stdout)")
      ->capture_default_str();

  // simulate
  auto* simulate_cmd =
      app.add_subcommand("simulate", "run one closed-loop realization, write a CSV trace");
  add_run_options(simulate_cmd, cfg);
  add_format_options(simulate_cmd, cfg);
  simulate_cmd
      ->add_option("--realization", cfg.realization,
                   "real | quantized | integer | integer-nonresetting | encrypted")
      ->capture_default_str();
  simulate_cmd->add_option("--horizon", cfg.horizon, "number of steps")
      ->capture_default_str();
  simulate_cmd->add_option("--seed", cfg.seed, "rng seed (keys and nonces)")
      ->capture_default_str();
  simulate_cmd->add_option("--key-bits", cfg.key_bits, "key size when generating")
      ->capture_default_str();
  simulate_cmd->add_option("--key", cfg.key_file, "key JSON file (both halves)")
      ->capture_default_str();
  simulate_cmd->add_option("--out", cfg.out, "trace CSV path ('-' for stdout)")
      ->capture_default_str();

  // analyze
  double an_eps_bar = 1.0 - 1e-9;
  double an_tol = 1e-8;
  std::string an_cert_out;
  auto* analyze_cmd =
      app.add_subcommand("analyze", "find and report a stability certificate as JSON");
  add_run_options(analyze_cmd, cfg);
  analyze_cmd->add_option("--eps-bar", an_eps_bar, "decay target in (0, 1)")
      ->capture_default_str();
  analyze_cmd->add_option("--tol", an_tol, "verification tolerance")->capture_default_str();
  analyze_cmd->add_option("--certificate-out", an_cert_out,
                          "also write the certificate JSON here");
  analyze_cmd->add_option("--out", cfg.out, "report path ('-' for stdout)")
      ->capture_default_str();

  // verify-certificate
  std::string vc_cert_file;
  double vc_tol = 1e-8;
  auto* verify_cmd = app.add_subcommand(
      "verify-certificate", "check a certificate against a plant/controller pair");
  add_run_options(verify_cmd, cfg);
  verify_cmd->add_option("--certificate", vc_cert_file, "certificate JSON file")
      ->required();
  verify_cmd->add_option("--tol", vc_tol, "eigenvalue margin tolerance")
      ->capture_default_str();

  // synthesize
  std::vector<double> sy_mu_grid;
  double sy_delta_lo = 1.0, sy_delta_hi = 1e4, sy_delta_tol = 0.5;
  std::string sy_scheme = "reflected";
  SolverOptions sy_options;
  auto* synth_cmd = app.add_subcommand(
      "synthesize", "search for LMI-feasible controller variables, write them as JSON");
  add_run_options(synth_cmd, cfg, false);
  synth_cmd->add_option("--mu", sy_mu_grid,
                        "contraction-rate grid points (default: built-in grid)");
  synth_cmd->add_option("--delta-lo", sy_delta_lo, "bisection lower edge")
      ->capture_default_str();
  synth_cmd->add_option("--delta-hi", sy_delta_hi, "bisection upper edge")
      ->capture_default_str();
  synth_cmd->add_option("--delta-tol", sy_delta_tol, "bisection tolerance")
      ->capture_default_str();
  synth_cmd->add_option("--scheme", sy_scheme, "reflected | alternating")
      ->capture_default_str();
  synth_cmd->add_option("--iterations", sy_options.max_iterations, "per-restart budget")
      ->capture_default_str();
  synth_cmd->add_option("--restarts", sy_options.restarts, "random restarts")
      ->capture_default_str();
  synth_cmd->add_option("--solver-seed", sy_options.seed, "solver rng seed")
      ->capture_default_str();
  synth_cmd->add_option("--out", cfg.out, "variables JSON path ('-' for stdout)")
      ->capture_default_str();

  // reconstruct
  std::string rc_nu_file;
  int rc_T = 1;
  std::string rc_p_out;
  auto* reconstruct_cmd = app.add_subcommand(
      "reconstruct", "recover a controller from synthesis variables, write it as JSON");
  add_run_options(reconstruct_cmd, cfg, false);
  reconstruct_cmd->add_option("--nu", rc_nu_file, "synthesis variables JSON file")
      ->required();
  reconstruct_cmd->add_option("--T", rc_T, "reset period stamped on the controller")
      ->capture_default_str();
  reconstruct_cmd->add_option("--p-out", rc_p_out, "also write the Lyapunov matrix here");
  reconstruct_cmd->add_option("--out", cfg.out, "controller JSON path ('-' for stdout)")
      ->capture_default_str();

  // demo-overflow
  std::string ov_resetting_out = "trace_resetting.csv";
  std::string ov_nonresetting_out = "trace_nonresetting.csv";
  auto* overflow_cmd = app.add_subcommand(
      "demo-overflow",
      "run the resetting and non-resetting integer loops side by side");
  add_run_options(overflow_cmd, cfg);
  add_format_options(overflow_cmd, cfg);
  overflow_cmd->add_option("--horizon", cfg.horizon, "number of steps")
      ->capture_default_str();
  overflow_cmd->add_option("--resetting-out", ov_resetting_out, "resetting trace CSV")
      ->capture_default_str();
  overflow_cmd
      ->add_option("--nonresetting-out", ov_nonresetting_out, "non-resetting trace CSV")
      ->capture_default_str();

  // netdemo
  NetdemoConfig net;
  auto* netdemo_cmd = app.add_subcommand(
      "netdemo", "run a networked session role (cloud, plant, or loopback)");
  add_run_options(netdemo_cmd, cfg);
  add_format_options(netdemo_cmd, cfg);
  netdemo_cmd->add_option("--role", net.role, "cloud | plant | loopback")->required();
  netdemo_cmd->add_option("--host", net.host, "cloud address (plant role)")
      ->capture_default_str();
  netdemo_cmd->add_option("--port", net.port, "cloud port (plant role)")
      ->capture_default_str();
  netdemo_cmd
      ->add_option("--listen-port", net.listen_port, "cloud listen port (0 = ephemeral)")
      ->capture_default_str();
  netdemo_cmd->add_option("--horizon", cfg.horizon, "number of steps")
      ->capture_default_str();
  netdemo_cmd->add_option("--seed", cfg.seed, "rng seed")->capture_default_str();
  netdemo_cmd->add_option("--key", cfg.key_file, "key JSON file")->capture_default_str();
  netdemo_cmd->add_option("--key-bits", cfg.key_bits, "key size for loopback generation")
      ->capture_default_str();
  netdemo_cmd->add_option("--timeout-ms", net.timeout_ms, "socket timeout")
      ->capture_default_str();
  netdemo_cmd->add_option("--session-id", net.session_id, "handshake session id")
      ->capture_default_str();
  netdemo_cmd->add_option("--transcript", net.transcript_out, "write this role's frame log");
  netdemo_cmd->add_option("--cloud-transcript", net.cloud_transcript_out,
                          "write the cloud frame log (loopback)");
  netdemo_cmd->add_option("--out", cfg.out, "trace CSV path ('-' for stdout)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    json err;
    err["error"] = "config";
    err["message"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }

  try {
    if (keygen_cmd->parsed()) return cmd_keygen(kg_bits, kg_seed, kg_public_only, kg_out);
    if (simulate_cmd->parsed()) return cmd_simulate(cfg);
    if (analyze_cmd->parsed()) return cmd_analyze(cfg, an_eps_bar, an_tol, an_cert_out);
    if (verify_cmd->parsed()) return cmd_verify_certificate(cfg, vc_cert_file, vc_tol);
    if (synth_cmd->parsed()) {
      if (sy_scheme == "reflected") {
        sy_options.scheme = ProjectionScheme::reflected;
      } else if (sy_scheme == "alternating") {
        sy_options.scheme = ProjectionScheme::alternating;
      } else {
        fail("config", "unknown projection scheme: " + sy_scheme);
      }
      return cmd_synthesize(cfg, sy_mu_grid, sy_delta_lo, sy_delta_hi, sy_delta_tol,
                            sy_options);
    }
    if (reconstruct_cmd->parsed()) return cmd_reconstruct(cfg, rc_nu_file, rc_T, rc_p_out);
    if (overflow_cmd->parsed())
      return cmd_demo_overflow(cfg, ov_resetting_out, ov_nonresetting_out);
    if (netdemo_cmd->parsed()) return cmd_netdemo(cfg, net);
    return 1;
  } catch (const Error& e) {
    json err;
    err["error"] = e.code();
    err["message"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  } catch (const std::exception& e) {
    json err;
    err["error"] = "internal";
    err["message"] = e.what();
    std::fprintf(stderr, "%s\n", err.dump().c_str());
    return 1;
  }
}
