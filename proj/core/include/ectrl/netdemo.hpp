#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ectrl/controller.hpp"
#include "ectrl/paillier.hpp"
#include "ectrl/plant.hpp"

namespace ectrl {

inline constexpr int kProtocolVersion = 1;

/// Frame layout on the wire: 4-byte big-endian payload length, 1 type
/// byte, then the payload. Step payloads carry an 8-byte big-endian step
/// index, a 2-byte big-endian ciphertext count, and that many
/// length-prefixed big-endian ciphertext residues.
enum class MsgType : std::uint8_t {
  hello = 1,        // JSON SessionHello, sensor/actuator -> cloud
  hello_ack = 2,    // JSON {protocol_version, session_id, status}
  sensor_data = 3,  // step payload, encrypted measurements
  control_data = 4, // step payload, encrypted controller outputs
  shutdown = 5,     // empty payload, ends the session
  error = 6,        // JSON {step, code, message}
};

/// Session handshake record binding every parameter both sides must
/// agree on before the first encrypted step.
struct SessionHello {
  int protocol_version = kProtocolVersion;
  int n = 0, m = 0, n_tilde = 0, T = 1;
  int n_x = 0, n_c = 0, n_u = 0, n_y = 0;
  Bigint kappa_p;
  std::string session_id;
};

std::string session_hello_to_json(const SessionHello& hello);
SessionHello session_hello_from_json(const std::string& text);

/// Length-prefixed big-endian encoding of one ciphertext residue.
std::vector<std::uint8_t> encode_wire_ciphertext(const Ciphertext& c);

/// Inverse of encode_wire_ciphertext; reads one ciphertext starting at
/// `offset` and advances it. Validates the decoded residue against
/// kappa_p^2 and throws Error("protocol") on malformed input.
Ciphertext decode_wire_ciphertext(const std::vector<std::uint8_t>& buf, std::size_t& offset,
                                  const PaillierPublicKey& pk);

std::vector<std::uint8_t> encode_step_payload(std::uint64_t k,
                                              const std::vector<Ciphertext>& cts);
std::pair<std::uint64_t, std::vector<Ciphertext>> decode_step_payload(
    const std::vector<std::uint8_t>& payload, const PaillierPublicKey& pk);

/// Direction-tagged hex log of every frame a role sent or received; two
/// runs with equal seeds and sessions must produce equal transcripts.
struct Transcript {
  std::string text;
  void record(const char* direction, MsgType type, const std::vector<std::uint8_t>& payload);
};

void send_frame(int fd, MsgType type, const std::vector<std::uint8_t>& payload,
                Transcript* transcript = nullptr);
std::pair<MsgType, std::vector<std::uint8_t>> recv_frame(int fd, int timeout_ms,
                                                         Transcript* transcript = nullptr);

/// Opens a TCP listener on 127.0.0.1:port (port 0 picks an ephemeral
/// port); returns the listening descriptor.
int open_listener(int port);
/// The port a listener is bound to.
int listener_port(int listen_fd);
int accept_client(int listen_fd, int timeout_ms);
/// Connects to host:port, retrying until timeout_ms elapses (the peer
/// may still be starting up).
int connect_to(const std::string& host, int port, int timeout_ms);
void close_socket(int fd);

/// True when the centered signed value of residue w needs more than
/// budget_bits two's-complement bits — the actuator-side plausibility
/// check that flags tampered or overflowed values.
bool exceeds_budget(const Bigint& w, const IntegerRingParams& ring, int budget_bits);

struct NetdemoOptions {
  long horizon = 50;
  int timeout_ms = 30000;
  std::string session_id = "session-0";
};

/// Cloud role: accepts one peer on listen_fd, validates the handshake
/// against the controller's own parameters, then serves one CONTROL_DATA
/// per SENSOR_DATA until SHUTDOWN. Operates exclusively on ciphertexts;
/// this function (and the whole role) never sees a private key.
void run_cloud(int listen_fd, const EncryptedController& ctrl, Rng& rng,
               const NetdemoOptions& options, Transcript* transcript = nullptr);

/// Sensor+actuator role: owns the plant and both key halves. Per step,
/// quantizes and encrypts the measurement, sends it, decrypts the
/// returned control value, applies it to the plant. Returns the recorded
/// trace; rows are flagged when a decrypted value fails its width budget.
SimulationTrace run_plant_side(const std::string& host, int port, const PlantModel& plant,
                               std::size_t n_c, const SessionParams& session, Rng& rng,
                               const NetdemoOptions& options,
                               Transcript* transcript = nullptr);

}  // namespace ectrl
