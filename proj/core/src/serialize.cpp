#include "ectrl/serialize.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ectrl/error.hpp"

namespace ectrl {

namespace {

using json = nlohmann::json;

json parse(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail("config", "malformed JSON document");
  return j;
}

[[noreturn]] void bad(const json::exception& e) {
  fail("config", std::string("invalid JSON document: ") + e.what());
}

json matrix_to(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Matrix matrix_from(const json& j) {
  try {
    std::size_t rows = j.at("rows").get<std::size_t>();
    std::size_t cols = j.at("cols").get<std::size_t>();
    std::vector<double> data = j.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) fail("config", "matrix data length mismatch");
    Matrix m(rows, cols);
    m.data() = std::move(data);
    return m;
  } catch (const json::exception& e) {
    bad(e);
  }
}

}  // namespace

std::string matrix_to_json(const Matrix& m) { return matrix_to(m).dump(2); }

Matrix matrix_from_json(const std::string& text) { return matrix_from(parse(text)); }

std::string key_to_json(const PaillierPublicKey& pk, const PaillierPrivateKey* sk) {
  json j{{"kappa_p", to_decimal(pk.kappa_p)}, {"key_bits", pk.key_bits}};
  if (sk) {
    j["private"] = json{{"lambda", to_decimal(sk->lambda)}, {"mu_dec", to_decimal(sk->mu_dec)}};
  }
  return j.dump(2);
}

std::pair<PaillierPublicKey, std::optional<PaillierPrivateKey>> key_from_json(
    const std::string& text) {
  json j = parse(text);
  try {
    PaillierPublicKey pk;
    pk.kappa_p = from_decimal(j.at("kappa_p").get<std::string>());
    pk.kappa_p_sq = pk.kappa_p * pk.kappa_p;
    pk.key_bits = j.at("key_bits").get<int>();
    if (pk.kappa_p < 2) fail("config", "invalid public key modulus");
    std::optional<PaillierPrivateKey> sk;
    if (j.contains("private")) {
      PaillierPrivateKey s;
      s.lambda = from_decimal(j.at("private").at("lambda").get<std::string>());
      s.mu_dec = from_decimal(j.at("private").at("mu_dec").get<std::string>());
      sk = s;
    }
    return {pk, sk};
  } catch (const json::exception& e) {
    bad(e);
  }
}

std::string plant_to_json(const PlantModel& plant) {
  json j{{"A", matrix_to(plant.A)},
         {"B", matrix_to(plant.B)},
         {"C", matrix_to(plant.C)},
         {"x0", plant.x0}};
  return j.dump(2);
}

PlantModel plant_from_json(const std::string& text) {
  json j = parse(text);
  try {
    PlantModel p;
    p.A = matrix_from(j.at("A"));
    p.B = matrix_from(j.at("B"));
    p.C = matrix_from(j.at("C"));
    p.x0 = j.at("x0").get<Vector>();
    p.validate();
    return p;
  } catch (const json::exception& e) {
    bad(e);
  }
}

std::string controller_to_json(const ControllerRealization& ctrl) {
  json j{{"A", matrix_to(ctrl.A)},
         {"B", matrix_to(ctrl.B)},
         {"C", matrix_to(ctrl.C)},
         {"D", matrix_to(ctrl.D)},
         {"T", ctrl.T}};
  return j.dump(2);
}

ControllerRealization controller_from_json(const std::string& text) {
  json j = parse(text);
  try {
    ControllerRealization c;
    c.A = matrix_from(j.at("A"));
    c.B = matrix_from(j.at("B"));
    c.C = matrix_from(j.at("C"));
    c.D = matrix_from(j.at("D"));
    c.T = j.value("T", 1);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    bad(e);
  }
}

std::string quantized_matrix_to_json(const QuantizedMatrix& qm) {
  std::vector<std::string> raw;
  raw.reserve(qm.raw.size());
  for (const Bigint& v : qm.raw) raw.push_back(to_decimal(v));
  json j{{"rows", qm.rows},
         {"cols", qm.cols},
         {"format", json{{"n", qm.format.n}, {"m", qm.format.m}}},
         {"raw", raw},
         {"saturated", qm.saturated}};
  return j.dump(2);
}

QuantizedMatrix quantized_matrix_from_json(const std::string& text) {
  json j = parse(text);
  try {
    QuantizedMatrix qm;
    qm.rows = j.at("rows").get<std::size_t>();
    qm.cols = j.at("cols").get<std::size_t>();
    qm.format.n = j.at("format").at("n").get<int>();
    qm.format.m = j.at("format").at("m").get<int>();
    qm.saturated = j.at("saturated").get<bool>();
    for (const auto& s : j.at("raw")) qm.raw.push_back(from_decimal(s.get<std::string>()));
    if (qm.raw.size() != qm.rows * qm.cols) fail("config", "quantized raw length mismatch");
    return qm;
  } catch (const json::exception& e) {
    bad(e);
  }
}

std::string certificate_to_json(const StabilityCertificate& cert) {
  json j{{"P", matrix_to(cert.P)}, {"mu", cert.mu},          {"delta", cert.delta},
         {"eps_small", cert.eps_small}, {"eps_bar", cert.eps_bar}, {"T", cert.T}};
  return j.dump(2);
}

StabilityCertificate certificate_from_json(const std::string& text) {
  json j = parse(text);
  try {
    StabilityCertificate c;
    c.P = matrix_from(j.at("P"));
    c.mu = j.at("mu").get<double>();
    c.delta = j.at("delta").get<double>();
    c.eps_small = j.at("eps_small").get<double>();
    c.eps_bar = j.at("eps_bar").get<double>();
    c.T = j.at("T").get<int>();
    return c;
  } catch (const json::exception& e) {
    bad(e);
  }
}

std::string nu_to_json(const SynthesisVariables& nu) {
  json j{{"X", matrix_to(nu.X)},   {"Y", matrix_to(nu.Y)},   {"K1", matrix_to(nu.K1)},
         {"K2", matrix_to(nu.K2)}, {"K3", matrix_to(nu.K3)}, {"K4", matrix_to(nu.K4)}};
  return j.dump(2);
}

SynthesisVariables nu_from_json(const std::string& text) {
  json j = parse(text);
  try {
    SynthesisVariables nu;
    nu.X = matrix_from(j.at("X"));
    nu.Y = matrix_from(j.at("Y"));
    nu.K1 = matrix_from(j.at("K1"));
    nu.K2 = matrix_from(j.at("K2"));
    nu.K3 = matrix_from(j.at("K3"));
    nu.K4 = matrix_from(j.at("K4"));
    return nu;
  } catch (const json::exception& e) {
    bad(e);
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("io", "cannot open " + path + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) fail("io", "read error on " + path);
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail("io", "cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) fail("io", "write error on " + path);
}

}  // namespace ectrl
