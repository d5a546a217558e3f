#pragma once

#include <optional>
#include <string>
#include <utility>

#include "ectrl/analysis.hpp"
#include "ectrl/controller.hpp"
#include "ectrl/fixed_point.hpp"
#include "ectrl/linalg.hpp"
#include "ectrl/paillier.hpp"
#include "ectrl/plant.hpp"
#include "ectrl/synthesis.hpp"

namespace ectrl {

// JSON text formats for every artifact the tooling reads or writes.
// All big integers are decimal strings; matrices are
// {"rows", "cols", "data": [row-major doubles]}; quantized matrices keep
// their raw integers as decimal strings, so files are exact.

std::string matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const std::string& text);

std::string key_to_json(const PaillierPublicKey& pk, const PaillierPrivateKey* sk);
std::pair<PaillierPublicKey, std::optional<PaillierPrivateKey>> key_from_json(
    const std::string& text);

std::string plant_to_json(const PlantModel& plant);
PlantModel plant_from_json(const std::string& text);

std::string controller_to_json(const ControllerRealization& ctrl);
ControllerRealization controller_from_json(const std::string& text);

std::string quantized_matrix_to_json(const QuantizedMatrix& qm);
QuantizedMatrix quantized_matrix_from_json(const std::string& text);

std::string certificate_to_json(const StabilityCertificate& cert);
StabilityCertificate certificate_from_json(const std::string& text);

std::string nu_to_json(const SynthesisVariables& nu);
SynthesisVariables nu_from_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace ectrl
