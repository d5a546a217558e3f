#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <string>

#include <nlohmann/json.hpp>

#include "ectrl/error.hpp"
#include "ectrl/rng.hpp"
#include "ectrl/serialize.hpp"
#include "support.hpp"

using namespace ectrl;

TEST_CASE("matrix JSON round-trip is exact") {
  Matrix m{{1.5, -2.25, 3.0e-17}, {0.1, 12345.6789, -0.0}};
  Matrix back = matrix_from_json(matrix_to_json(m));
  REQUIRE(back.rows() == 2);
  REQUIRE(back.cols() == 3);
  CHECK(back == m);  // bitwise: doubles survive the decimal round-trip

  CHECK_ERROR_CODE(matrix_from_json("{]"), "config");
  CHECK_ERROR_CODE(matrix_from_json(R"({"rows": 2, "cols": 2, "data": [1, 2, 3]})"), "config");
}

TEST_CASE("key JSON round-trip with and without the private half") {
  Rng rng(9);
  auto [pk, sk] = keygen(64, rng);

  SUBCASE("public only") {
    auto [pk2, sk2] = key_from_json(key_to_json(pk, nullptr));
    CHECK(pk2.kappa_p == pk.kappa_p);
    CHECK_FALSE(sk2.has_value());
  }
  SUBCASE("both halves") {
    auto [pk2, sk2] = key_from_json(key_to_json(pk, &sk));
    CHECK(pk2.kappa_p == pk.kappa_p);
    REQUIRE(sk2.has_value());
    CHECK(sk2->lambda == sk.lambda);
    CHECK(sk2->mu_dec == sk.mu_dec);

    // the decrypt path still works after the round-trip
    Ciphertext c = encrypt(embed_signed(-42, pk2), pk2, rng);
    CHECK(center_signed(decrypt(c, pk2, *sk2), pk2) == -42);
  }
  SUBCASE("degenerate modulus is rejected") {
    CHECK_ERROR_CODE(key_from_json(R"({"kappa_p": "1"})"), "config");
  }
}

TEST_CASE("plant JSON round-trip") {
  PlantModel plant = batch_reactor();
  PlantModel back = plant_from_json(plant_to_json(plant));
  CHECK(back.A == plant.A);
  CHECK(back.B == plant.B);
  CHECK(back.C == plant.C);
  REQUIRE(back.x0.size() == plant.x0.size());
  for (std::size_t i = 0; i < plant.x0.size(); ++i) CHECK(back.x0[i] == plant.x0[i]);

  CHECK_ERROR_CODE(plant_from_json(R"({"A": 3})"), "config");
}

TEST_CASE("controller JSON round-trip keeps the reset period") {
  ControllerRealization ctrl = ectrl_test::controller_a(25);
  ControllerRealization back = controller_from_json(controller_to_json(ctrl));
  CHECK(back.A == ctrl.A);
  CHECK(back.B == ctrl.B);
  CHECK(back.C == ctrl.C);
  CHECK(back.D == ctrl.D);
  CHECK(back.T == 25);

  // T omitted falls back to the struct default
  nlohmann::json j = nlohmann::json::parse(controller_to_json(ctrl));
  j.erase("T");
  ControllerRealization defaulted = controller_from_json(j.dump());
  CHECK(defaulted.T == 1);
}

TEST_CASE("quantized matrix JSON keeps raw integers exactly") {
  Matrix m{{0.3, -100.0}, {0.03125, 0.5}};
  QuantizedMatrix qm = quantize_matrix(m, FixedPointFormat{8, 4});
  QuantizedMatrix back = quantized_matrix_from_json(quantized_matrix_to_json(qm));
  CHECK(back.rows == qm.rows);
  CHECK(back.cols == qm.cols);
  CHECK(back.format == qm.format);
  CHECK(back.saturated == qm.saturated);
  REQUIRE(back.raw.size() == qm.raw.size());
  for (std::size_t i = 0; i < qm.raw.size(); ++i) CHECK(back.raw[i] == qm.raw[i]);

  CHECK_ERROR_CODE(quantized_matrix_from_json( R"({"rows": 2, "cols": 2, "raw": ["1"], "format": {"n": 8, "m": 4}})"), "config");
}

TEST_CASE("certificate JSON round-trip") {
  StabilityCertificate cert;
  cert.P = Matrix{{4.0, 0.5}, {0.5, 3.0}};
  cert.mu = -0.21275862068965523;
  cert.delta = 388.193049337;
  cert.eps_small = 0.6351409779949747;
  cert.eps_bar = 1.0 - 1e-9;
  cert.T = 26;
  StabilityCertificate back = certificate_from_json(certificate_to_json(cert));
  CHECK(back.P == cert.P);
  CHECK(back.mu == cert.mu);
  CHECK(back.delta == cert.delta);
  CHECK(back.eps_small == cert.eps_small);
  CHECK(back.eps_bar == cert.eps_bar);
  CHECK(back.T == cert.T);
}

TEST_CASE("synthesis variables JSON round-trip") {
  Rng rng(4);
  SynthesisVariables nu;
  nu.X = Matrix{{2.0, 0.1}, {0.1, 3.0}};
  nu.Y = Matrix{{1.5, -0.2}, {-0.2, 2.5}};
  nu.K1 = Matrix{{0.3, 0.4}, {-0.1, 0.2}};
  nu.K2 = Matrix{{1.0}, {2.0}};
  nu.K3 = Matrix{{0.5, -0.5}};
  nu.K4 = Matrix{{0.25}};
  SynthesisVariables back = nu_from_json(nu_to_json(nu));
  CHECK(back.X == nu.X);
  CHECK(back.Y == nu.Y);
  CHECK(back.K1 == nu.K1);
  CHECK(back.K2 == nu.K2);
  CHECK(back.K3 == nu.K3);
  CHECK(back.K4 == nu.K4);

  CHECK_ERROR_CODE(nu_from_json(R"({"X": {"rows":1,"cols":1,"data":[1]}})"), "config");
}

TEST_CASE("text file helpers round-trip and surface io errors") {
  std::string path = "serialize_test_scratch.json";
  std::string content = "{\"hello\": 1}\n";
  write_text_file(path, content);
  CHECK(read_text_file(path) == content);
  std::remove(path.c_str());

  CHECK_ERROR_CODE(read_text_file("definitely/not/a/real/path.json"), "io");
  CHECK_ERROR_CODE(write_text_file("no_such_dir/file.json", "x"), "io");
}
