#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <string>
#include <thread>
#include <vector>

#include "ectrl/controller.hpp"
#include "ectrl/error.hpp"
#include "ectrl/netdemo.hpp"
#include "ectrl/paillier.hpp"
#include "ectrl/plant.hpp"
#include "ectrl/rng.hpp"
#include "support.hpp"

using namespace ectrl;
using ectrl_test::controller_b;

namespace {

std::string hex_of_bytes(const std::string& s) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * s.size());
  for (unsigned char c : s) {
    out.push_back(digits[c >> 4]);
    out.push_back(digits[c & 0xf]);
  }
  return out;
}

struct LoopbackResult {
  SimulationTrace trace;
  std::string plant_transcript;
  std::string cloud_transcript;
};

LoopbackResult run_loopback(const PlantModel& plant, const ControllerRealization& ctrl,
                            const SessionParams& session, const PaillierPublicKey& pk,
                            long horizon, std::uint64_t cloud_seed,
                            std::uint64_t plant_seed) {
  auto qc = quantize_controller(ctrl, session.format);
  auto rc = ring_controller(qc, session.ring);
  auto ec = encrypted_controller(rc, pk);

  int listen_fd = open_listener(0);
  int port = listener_port(listen_fd);

  NetdemoOptions options;
  options.horizon = horizon;
  options.timeout_ms = 120000;
  options.session_id = "loopback-test";

  LoopbackResult result;
  Transcript cloud_tr;
  std::atomic<bool> cloud_failed{false};
  std::string cloud_error;
  std::thread cloud([&] {
    Rng cloud_rng(cloud_seed);
    try {
      run_cloud(listen_fd, ec, cloud_rng, options, &cloud_tr);
    } catch (const std::exception& e) {
      cloud_failed = true;
      cloud_error = e.what();
    }
  });

  Transcript plant_tr;
  Rng plant_rng(plant_seed);
  result.trace = run_plant_side("127.0.0.1", port, plant, ctrl.n_c(), session, plant_rng,
                                options, &plant_tr);
  cloud.join();
  close_socket(listen_fd);
  REQUIRE_FALSE_MESSAGE(cloud_failed.load(), cloud_error);
  result.plant_transcript = plant_tr.text;
  result.cloud_transcript = cloud_tr.text;
  return result;
}

}  // namespace

TEST_CASE("wire ciphertext encoding round-trips") {
  auto [pk, sk] = keypair_from_primes(5, 7);
  Rng rng(1);
  Ciphertext c = encrypt(4, pk, rng);

  auto bytes = encode_wire_ciphertext(c);
  REQUIRE(bytes.size() >= 5);
  // 4-byte big-endian length prefix
  std::size_t declared = (std::size_t(bytes[0]) << 24) | (std::size_t(bytes[1]) << 16) |
                         (std::size_t(bytes[2]) << 8) | std::size_t(bytes[3]);
  CHECK(declared == bytes.size() - 4);

  std::size_t offset = 0;
  Ciphertext back = decode_wire_ciphertext(bytes, offset, pk);
  CHECK(offset == bytes.size());
  CHECK(back.value == c.value);

  SUBCASE("truncated buffer is rejected") {
    auto cut = bytes;
    cut.pop_back();
    std::size_t off = 0;
    CHECK_ERROR_CODE(decode_wire_ciphertext(cut, off, pk), "protocol");
  }
  SUBCASE("residue outside the ciphertext space is rejected") {
    // 1226 >= kappa_p^2 = 1225
    std::vector<std::uint8_t> big{0, 0, 0, 2, 0x04, 0xca};
    std::size_t off = 0;
    CHECK_ERROR_CODE(decode_wire_ciphertext(big, off, pk), "protocol");
  }
}

TEST_CASE("step payload encoding round-trips and rejects malformed input") {
  auto [pk, sk] = keypair_from_primes(5, 7);
  Rng rng(2);
  std::vector<Ciphertext> cts{encrypt(1, pk, rng), encrypt(2, pk, rng), encrypt(3, pk, rng)};

  auto payload = encode_step_payload(7, cts);
  // 8-byte step index, 2-byte count
  CHECK(payload[7] == 7);
  CHECK(payload[9] == 3);

  auto [k, back] = decode_step_payload(payload, pk);
  CHECK(k == 7);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(back[i].value == cts[i].value);

  SUBCASE("trailing bytes are rejected") {
    auto extra = payload;
    extra.push_back(0);
    CHECK_ERROR_CODE(decode_step_payload(extra, pk), "protocol");
  }
  SUBCASE("count pointing past the buffer is rejected") {
    auto lying = payload;
    lying[9] = 4;
    CHECK_ERROR_CODE(decode_step_payload(lying, pk), "protocol");
  }
}

TEST_CASE("session hello JSON round-trips") {
  SessionHello hello;
  hello.n = 24;
  hello.m = 14;
  hello.n_tilde = 281;
  hello.T = 8;
  hello.n_x = 4;
  hello.n_c = 4;
  hello.n_u = 1;
  hello.n_y = 2;
  hello.kappa_p = from_decimal("123456789012345678901234567890123456789");
  hello.session_id = "abc-123";

  SessionHello back = session_hello_from_json(session_hello_to_json(hello));
  CHECK(back.protocol_version == kProtocolVersion);
  CHECK(back.n == hello.n);
  CHECK(back.m == hello.m);
  CHECK(back.n_tilde == hello.n_tilde);
  CHECK(back.T == hello.T);
  CHECK(back.n_x == hello.n_x);
  CHECK(back.n_c == hello.n_c);
  CHECK(back.n_u == hello.n_u);
  CHECK(back.n_y == hello.n_y);
  CHECK(back.kappa_p == hello.kappa_p);
  CHECK(back.session_id == hello.session_id);

  CHECK_ERROR_CODE(session_hello_from_json("not json at all"), "protocol");
  CHECK_ERROR_CODE(session_hello_from_json("{\"protocol_version\": 1}"), "protocol");
}

TEST_CASE("width budget check on centered ring values") {
  IntegerRingParams ring{8};
  // w = 5 centered is 5: fits 4 signed bits, not 3
  CHECK_FALSE(exceeds_budget(5, ring, 4));
  CHECK(exceeds_budget(5, ring, 3));
  // w = 200 centered is -56: fits 7 signed bits, not 6
  CHECK_FALSE(exceeds_budget(200, ring, 7));
  CHECK(exceeds_budget(200, ring, 6));
  // zero fits any positive budget
  CHECK_FALSE(exceeds_budget(0, ring, 1));
  CHECK(exceeds_budget(0, ring, 0));
}

TEST_CASE("byte-flipped control ciphertexts are flagged by the budget check") {
  Rng rng(77);
  auto [pk, sk] = keygen(512, rng);
  IntegerRingParams ring{281};
  FixedPointFormat fmt{24, 14};

  // a plausible actuation residue early in the period
  auto budgets = bit_growth(0, 8, fmt.n, fmt.m, 4, 2);
  const int budget = budgets.second.integer_bits;
  Bigint honest_raw = from_decimal("-123456789");  // well inside the budget
  Ciphertext c = encrypt(embed_signed(honest_raw, pk), pk, rng);

  // sanity: the untampered ciphertext passes
  {
    Bigint w = decrypt_to_ring(c, pk, sk, ring);
    CHECK_FALSE(exceeds_budget(w, ring, budget));
  }

  auto wire = encode_wire_ciphertext(c);
  int flagged = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    auto tampered = wire;
    // flip one random byte of the residue body, never the length prefix
    std::size_t idx = 4 + static_cast<std::size_t>(rng.next_u64() % (wire.size() - 4));
    std::uint8_t mask = static_cast<std::uint8_t>(1 + rng.next_u64() % 255);
    tampered[idx] ^= mask;
    try {
      std::size_t off = 0;
      Ciphertext evil = decode_wire_ciphertext(tampered, off, pk);
      Bigint w = decrypt_to_ring(evil, pk, sk, ring);
      if (exceeds_budget(w, ring, budget)) ++flagged;
    } catch (const Error&) {
      ++flagged;  // rejected before decryption: also a detection
    }
  }
  CHECK(flagged >= 99);
}

TEST_CASE("loopback demo matches the in-process encrypted realization") {
  PlantModel plant = batch_reactor();
  ControllerRealization ctrl = controller_b(8);

  Rng key_rng(2027);
  auto [pk, sk] = keygen(512, key_rng);

  SessionParams session;
  session.format = FixedPointFormat{24, 14};
  session.ring = IntegerRingParams{281};
  session.T = 8;
  session.public_key = &pk;
  session.private_key = &sk;

  const long horizon = 50;
  auto loop = run_loopback(plant, ctrl, session, pk, horizon, 11, 13);

  Rng sim_rng(99);
  SimulationTrace reference =
      run_closed_loop(plant, ctrl, session, horizon, Realization::encrypted, &sim_rng);

  REQUIRE(loop.trace.rows.size() == static_cast<std::size_t>(horizon));
  REQUIRE(reference.rows.size() == static_cast<std::size_t>(horizon));
  CHECK_FALSE(loop.trace.any_overflow);
  for (long k = 0; k < horizon; ++k) {
    const auto& got = loop.trace.rows[static_cast<std::size_t>(k)];
    const auto& want = reference.rows[static_cast<std::size_t>(k)];
    CHECK(got.k == k);
    REQUIRE(got.u.size() == want.u.size());
    for (std::size_t i = 0; i < got.u.size(); ++i) CHECK(got.u[i] == want.u[i]);
    REQUIRE(got.x.size() == want.x.size());
    for (std::size_t i = 0; i < got.x.size(); ++i) CHECK(got.x[i] == want.x[i]);
    // the controller state stays private to the cloud: the local trace
    // records zeros there
    for (double v : got.xc) CHECK(v == 0.0);
    CHECK_FALSE(got.overflow);
  }

  SUBCASE("transcripts are deterministic given seeds and session id") {
    auto rerun = run_loopback(plant, ctrl, session, pk, horizon, 11, 13);
    CHECK(rerun.plant_transcript == loop.plant_transcript);
    CHECK(rerun.cloud_transcript == loop.cloud_transcript);
  }

  SUBCASE("cloud transcript carries no private key material") {
    REQUIRE_FALSE(loop.cloud_transcript.empty());
    // positive control: the public modulus does appear (in the hello JSON)
    CHECK(loop.cloud_transcript.find(hex_of_bytes(to_decimal(pk.kappa_p))) !=
          std::string::npos);
    for (const Bigint& secret : {sk.lambda, sk.mu_dec}) {
      CHECK(loop.cloud_transcript.find(hex_of_bytes(to_decimal(secret))) ==
            std::string::npos);
      // raw big-endian bytes of the secret, as a hex substring
      std::string raw_hex = secret.get_str(16);
      if (raw_hex.size() % 2 == 1) raw_hex.insert(raw_hex.begin(), '0');
      CHECK(loop.cloud_transcript.find(raw_hex) == std::string::npos);
    }
  }
}

TEST_CASE("cloud rejects a mismatched session") {
  PlantModel plant = batch_reactor();
  ControllerRealization ctrl = controller_b(8);
  Rng key_rng(5);
  auto [pk, sk] = keygen(512, key_rng);

  FixedPointFormat fmt{24, 14};
  IntegerRingParams ring{281};
  auto ec = encrypted_controller(ring_controller(quantize_controller(ctrl, fmt), ring), pk);

  int listen_fd = open_listener(0);
  int port = listener_port(listen_fd);
  NetdemoOptions options;
  options.horizon = 5;
  options.timeout_ms = 30000;

  std::atomic<bool> cloud_threw{false};
  std::thread cloud([&] {
    Rng cloud_rng(1);
    try {
      run_cloud(listen_fd, ec, cloud_rng, options, nullptr);
    } catch (const Error&) {
      cloud_threw = true;
    }
  });

  // plant side advertises a different reset period
  SessionParams session;
  session.format = fmt;
  session.ring = ring;
  session.T = 9;
  session.public_key = &pk;
  session.private_key = &sk;
  Rng plant_rng(2);
  CHECK_THROWS_WITH_AS(
      run_plant_side("127.0.0.1", port, plant, ctrl.n_c(), session, plant_rng, options),
      doctest::Contains("rejected"), Error);
  cloud.join();
  close_socket(listen_fd);
  CHECK(cloud_threw.load());
}

TEST_CASE("cloud answers a malformed first frame with an error frame") {
  PlantModel plant = batch_reactor();
  ControllerRealization ctrl = controller_b(8);
  Rng key_rng(6);
  auto [pk, sk] = keygen(512, key_rng);
  FixedPointFormat fmt{24, 14};
  IntegerRingParams ring{281};
  auto ec = encrypted_controller(ring_controller(quantize_controller(ctrl, fmt), ring), pk);

  int listen_fd = open_listener(0);
  int port = listener_port(listen_fd);
  NetdemoOptions options;
  options.timeout_ms = 30000;

  std::atomic<bool> cloud_threw{false};
  std::thread cloud([&] {
    Rng cloud_rng(1);
    try {
      run_cloud(listen_fd, ec, cloud_rng, options, nullptr);
    } catch (const Error&) {
      cloud_threw = true;
    }
  });

  int fd = connect_to("127.0.0.1", port, 30000);
  send_frame(fd, MsgType::sensor_data, {1, 2, 3});
  auto [type, payload] = recv_frame(fd, 30000);
  CHECK(type == MsgType::error);
  std::string body(payload.begin(), payload.end());
  CHECK(body.find("protocol") != std::string::npos);
  close_socket(fd);
  cloud.join();
  close_socket(listen_fd);
  CHECK(cloud_threw.load());
}

TEST_CASE("connecting to a dead port times out") {
  // grab an ephemeral port, then free it so nobody is listening there
  int fd = open_listener(0);
  int port = listener_port(fd);
  close_socket(fd);
  CHECK_ERROR_CODE(connect_to("127.0.0.1", port, 300), "timeout");
  CHECK_THROWS_WITH_AS(connect_to("not-an-address", 1, 300),
                       doctest::Contains("IPv4"), Error);
}
