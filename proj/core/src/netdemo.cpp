#include "ectrl/netdemo.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <thread>

#include <nlohmann/json.hpp>

#include "ectrl/error.hpp"
#include "ectrl/fixed_point.hpp"

namespace ectrl {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

json parse_json(const std::string& text) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) fail("protocol", "malformed JSON message");
  return j;
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint64_t get_be(const std::vector<std::uint8_t>& buf, std::size_t off, int bytes) {
  if (off + static_cast<std::size_t>(bytes) > buf.size()) {
    fail("protocol", "truncated message");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v = (v << 8) | buf[off + static_cast<std::size_t>(i)];
  return v;
}

long remaining_ms(Clock::time_point deadline) {
  auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
  return left.count();
}

void wait_readable(int fd, Clock::time_point deadline) {
  for (;;) {
    long left = remaining_ms(deadline);
    if (left <= 0) fail("timeout", "timed out waiting for the peer");
    pollfd pfd{fd, POLLIN, 0};
    int rc = ::poll(&pfd, 1, static_cast<int>(std::min(left, 1000L)));
    if (rc > 0) return;
    if (rc < 0 && errno != EINTR) fail("io", std::string("poll: ") + std::strerror(errno));
  }
}

void read_exact(int fd, std::uint8_t* buf, std::size_t count, Clock::time_point deadline) {
  std::size_t got = 0;
  while (got < count) {
    wait_readable(fd, deadline);
    ssize_t n = ::recv(fd, buf + got, count - got, 0);
    if (n == 0) fail("io", "peer closed the connection mid-frame");
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail("io", std::string("recv: ") + std::strerror(errno));
    }
    got += static_cast<std::size_t>(n);
  }
}

void write_all(int fd, const std::uint8_t* buf, std::size_t count) {
  std::size_t sent = 0;
  while (sent < count) {
    ssize_t n = ::send(fd, buf + sent, count - sent, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("io", std::string("send: ") + std::strerror(errno));
    }
    sent += static_cast<std::size_t>(n);
  }
}

std::vector<std::uint8_t> to_bytes(const std::string& s) {
  return std::vector<std::uint8_t>(s.begin(), s.end());
}

std::string to_string_payload(const std::vector<std::uint8_t>& payload) {
  return std::string(payload.begin(), payload.end());
}

constexpr std::size_t kMaxPayload = 64u << 20;

void send_json_error(int fd, long step, const std::string& code, const std::string& message,
                     Transcript* transcript) {
  json j{{"step", step}, {"code", code}, {"message", message}};
  try {
    send_frame(fd, MsgType::error, to_bytes(j.dump()), transcript);
  } catch (const Error&) {
    // reporting is best effort; the original failure is what matters
  }
}

}  // namespace

std::string session_hello_to_json(const SessionHello& hello) {
  json j{{"protocol_version", hello.protocol_version},
         {"n", hello.n},
         {"m", hello.m},
         {"n_tilde", hello.n_tilde},
         {"T", hello.T},
         {"n_x", hello.n_x},
         {"n_c", hello.n_c},
         {"n_u", hello.n_u},
         {"n_y", hello.n_y},
         {"kappa_p", to_decimal(hello.kappa_p)},
         {"session_id", hello.session_id}};
  return j.dump();
}

SessionHello session_hello_from_json(const std::string& text) {
  json j = parse_json(text);
  SessionHello h;
  try {
    h.protocol_version = j.at("protocol_version").get<int>();
    h.n = j.at("n").get<int>();
    h.m = j.at("m").get<int>();
    h.n_tilde = j.at("n_tilde").get<int>();
    h.T = j.at("T").get<int>();
    h.n_x = j.at("n_x").get<int>();
    h.n_c = j.at("n_c").get<int>();
    h.n_u = j.at("n_u").get<int>();
    h.n_y = j.at("n_y").get<int>();
    h.kappa_p = from_decimal(j.at("kappa_p").get<std::string>());
    h.session_id = j.at("session_id").get<std::string>();
  } catch (const json::exception& e) {
    fail("protocol", std::string("invalid session hello: ") + e.what());
  }
  return h;
}

std::vector<std::uint8_t> encode_wire_ciphertext(const Ciphertext& c) {
  if (c.value < 0) fail("protocol", "ciphertext residues are nonnegative");
  std::size_t bytes = (mpz_sizeinbase(c.value.get_mpz_t(), 2) + 7) / 8;
  if (c.value == 0) bytes = 0;
  if (bytes > 0xffffffffu) fail("protocol", "ciphertext too large to frame");
  std::vector<std::uint8_t> out;
  out.reserve(4 + bytes);
  put_u32(out, static_cast<std::uint32_t>(bytes));
  if (bytes > 0) {
    std::vector<std::uint8_t> limbs(bytes);
    std::size_t written = 0;
    mpz_export(limbs.data(), &written, 1, 1, 1, 0, c.value.get_mpz_t());
    limbs.resize(written);
    out.insert(out.end(), limbs.begin(), limbs.end());
  }
  return out;
}

Ciphertext decode_wire_ciphertext(const std::vector<std::uint8_t>& buf, std::size_t& offset,
                                  const PaillierPublicKey& pk) {
  std::uint64_t len = get_be(buf, offset, 4);
  offset += 4;
  if (offset + len > buf.size()) fail("protocol", "truncated ciphertext");
  Ciphertext c;
  if (len > 0) {
    mpz_import(c.value.get_mpz_t(), static_cast<std::size_t>(len), 1, 1, 1, 0,
               buf.data() + offset);
  }
  offset += static_cast<std::size_t>(len);
  if (c.value < 1 || c.value >= pk.kappa_p_sq) {
    fail("protocol", "ciphertext residue out of range for the session key");
  }
  return c;
}

std::vector<std::uint8_t> encode_step_payload(std::uint64_t k,
                                              const std::vector<Ciphertext>& cts) {
  if (cts.size() > 0xffff) fail("protocol", "too many ciphertexts for one step");
  std::vector<std::uint8_t> out;
  put_u64(out, k);
  put_u16(out, static_cast<std::uint16_t>(cts.size()));
  for (const Ciphertext& c : cts) {
    std::vector<std::uint8_t> enc = encode_wire_ciphertext(c);
    out.insert(out.end(), enc.begin(), enc.end());
  }
  return out;
}

std::pair<std::uint64_t, std::vector<Ciphertext>> decode_step_payload(
    const std::vector<std::uint8_t>& payload, const PaillierPublicKey& pk) {
  std::uint64_t k = get_be(payload, 0, 8);
  std::uint64_t count = get_be(payload, 8, 2);
  std::size_t offset = 10;
  std::vector<Ciphertext> cts;
  cts.reserve(static_cast<std::size_t>(count));
  for (std::uint64_t i = 0; i < count; ++i) {
    cts.push_back(decode_wire_ciphertext(payload, offset, pk));
  }
  if (offset != payload.size()) fail("protocol", "trailing bytes after step payload");
  return {k, std::move(cts)};
}

void Transcript::record(const char* direction, MsgType type,
                        const std::vector<std::uint8_t>& payload) {
  static const char* hex = "0123456789abcdef";
  text += direction;
  text += " type=";
  text += std::to_string(static_cast<int>(type));
  text += " len=";
  text += std::to_string(payload.size());
  text += " ";
  for (std::uint8_t b : payload) {
    text += hex[b >> 4];
    text += hex[b & 0xf];
  }
  text += "\n";
}

void send_frame(int fd, MsgType type, const std::vector<std::uint8_t>& payload,
                Transcript* transcript) {
  if (payload.size() > kMaxPayload) fail("protocol", "frame payload too large");
  std::vector<std::uint8_t> frame;
  frame.reserve(5 + payload.size());
  put_u32(frame, static_cast<std::uint32_t>(payload.size()));
  frame.push_back(static_cast<std::uint8_t>(type));
  frame.insert(frame.end(), payload.begin(), payload.end());
  write_all(fd, frame.data(), frame.size());
  if (transcript) transcript->record("send", type, payload);
}

std::pair<MsgType, std::vector<std::uint8_t>> recv_frame(int fd, int timeout_ms,
                                                         Transcript* transcript) {
  auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  std::uint8_t head[5];
  read_exact(fd, head, 5, deadline);
  std::uint32_t len = (static_cast<std::uint32_t>(head[0]) << 24) |
                      (static_cast<std::uint32_t>(head[1]) << 16) |
                      (static_cast<std::uint32_t>(head[2]) << 8) | head[3];
  if (len > kMaxPayload) fail("protocol", "frame payload too large");
  MsgType type = static_cast<MsgType>(head[4]);
  std::vector<std::uint8_t> payload(len);
  if (len > 0) read_exact(fd, payload.data(), len, deadline);
  if (transcript) transcript->record("recv", type, payload);
  return {type, std::move(payload)};
}

int open_listener(int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (fd < 0) fail("io", std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
    int err = errno;
    ::close(fd);
    fail("io", std::string("bind: ") + std::strerror(err));
  }
  if (::listen(fd, 1) != 0) {
    int err = errno;
    ::close(fd);
    fail("io", std::string("listen: ") + std::strerror(err));
  }
  return fd;
}

int listener_port(int listen_fd) {
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  if (::getsockname(listen_fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
    fail("io", std::string("getsockname: ") + std::strerror(errno));
  }
  return ntohs(addr.sin_port);
}

int accept_client(int listen_fd, int timeout_ms) {
  auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  wait_readable(listen_fd, deadline);
  int fd = ::accept(listen_fd, nullptr, nullptr);
  if (fd < 0) fail("io", std::string("accept: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

int connect_to(const std::string& host, int port, int timeout_ms) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  const std::string resolved = host == "localhost" ? "127.0.0.1" : host;
  if (::inet_pton(AF_INET, resolved.c_str(), &addr.sin_addr) != 1) {
    fail("invalid_argument", "connect_to expects an IPv4 address: " + host);
  }
  auto deadline = Clock::now() + std::chrono::milliseconds(timeout_ms);
  for (;;) {
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) fail("io", std::string("socket: ") + std::strerror(errno));
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
      int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return fd;
    }
    ::close(fd);
    if (remaining_ms(deadline) <= 0) {
      fail("timeout", "could not connect to " + host + ":" + std::to_string(port));
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void close_socket(int fd) {
  if (fd >= 0) ::close(fd);
}

bool exceeds_budget(const Bigint& w, const IntegerRingParams& ring, int budget_bits) {
  Bigint centered = ring_center(w, ring);
  if (centered == 0) return budget_bits < 1;
  Bigint mag = abs(centered);
  unsigned long width = bit_width(mag) + 1;  // sign bit
  return width > static_cast<unsigned long>(budget_bits);
}

void run_cloud(int listen_fd, const EncryptedController& ctrl, Rng& rng,
               const NetdemoOptions& options, Transcript* transcript) {
  int fd = accept_client(listen_fd, options.timeout_ms);
  struct Closer {
    int fd;
    ~Closer() { close_socket(fd); }
  } closer{fd};

  SessionParams session;
  session.format = ctrl.fmt;
  session.ring = ctrl.ring;
  session.T = ctrl.T;
  session.public_key = &ctrl.pk;

  auto [type, payload] = recv_frame(fd, options.timeout_ms, transcript);
  if (type != MsgType::hello) {
    send_json_error(fd, -1, "protocol", "expected HELLO", transcript);
    fail("protocol", "cloud: expected HELLO as the first frame");
  }
  SessionHello hello = session_hello_from_json(to_string_payload(payload));
  std::string reject;
  if (hello.protocol_version != kProtocolVersion) reject = "protocol version mismatch";
  else if (hello.n != ctrl.fmt.n || hello.m != ctrl.fmt.m) reject = "fixed-point format mismatch";
  else if (hello.n_tilde != ctrl.ring.n_tilde) reject = "ring width mismatch";
  else if (hello.T != ctrl.T) reject = "reset period mismatch";
  else if (hello.n_c != static_cast<int>(ctrl.n_c) ||
           hello.n_u != static_cast<int>(ctrl.n_u) ||
           hello.n_y != static_cast<int>(ctrl.n_y)) reject = "dimension mismatch";
  else if (hello.kappa_p != ctrl.pk.kappa_p) reject = "public key mismatch";
  if (!reject.empty()) {
    send_json_error(fd, -1, "protocol", reject, transcript);
    fail("protocol", "cloud: " + reject);
  }

  json ack{{"protocol_version", kProtocolVersion},
           {"session_id", hello.session_id},
           {"status", "ok"}};
  send_frame(fd, MsgType::hello_ack, to_bytes(ack.dump()), transcript);

  EncryptedControllerState state;
  state.x.reserve(ctrl.n_c);
  for (std::size_t i = 0; i < ctrl.n_c; ++i) state.x.push_back(encrypt(0, ctrl.pk, rng));

  for (;;) {
    auto [msg, body] = recv_frame(fd, options.timeout_ms, transcript);
    if (msg == MsgType::shutdown) return;
    if (msg != MsgType::sensor_data) {
      send_json_error(fd, state.k, "protocol", "expected SENSOR_DATA or SHUTDOWN", transcript);
      fail("protocol", "cloud: unexpected frame type");
    }
    auto [k, y_enc] = decode_step_payload(body, ctrl.pk);
    if (static_cast<long>(k) != state.k) {
      send_json_error(fd, state.k, "protocol", "step index out of sequence", transcript);
      fail("protocol", "cloud: step index out of sequence");
    }
    if (y_enc.size() != ctrl.n_y) {
      send_json_error(fd, state.k, "protocol", "measurement count mismatch", transcript);
      fail("protocol", "cloud: measurement count mismatch");
    }
    auto [next, u_enc] = reset_step_encrypted(state, y_enc, ctrl, session, rng);
    send_frame(fd, MsgType::control_data, encode_step_payload(k, u_enc), transcript);
    state = std::move(next);
  }
}

SimulationTrace run_plant_side(const std::string& host, int port, const PlantModel& plant,
                               std::size_t n_c, const SessionParams& session, Rng& rng,
                               const NetdemoOptions& options, Transcript* transcript) {
  plant.validate();
  if (!session.public_key || !session.private_key) {
    fail("config", "the plant side owns both key halves");
  }
  session.validate(n_c, plant.n_y(), plant.n_u());
  if (options.horizon < 1) fail("invalid_argument", "netdemo horizon must be positive");

  int fd = connect_to(host, port, options.timeout_ms);
  struct Closer {
    int fd;
    ~Closer() { close_socket(fd); }
  } closer{fd};

  SessionHello hello;
  hello.n = session.format.n;
  hello.m = session.format.m;
  hello.n_tilde = session.ring.n_tilde;
  hello.T = session.T;
  hello.n_x = static_cast<int>(plant.n_x());
  hello.n_c = static_cast<int>(n_c);
  hello.n_u = static_cast<int>(plant.n_u());
  hello.n_y = static_cast<int>(plant.n_y());
  hello.kappa_p = session.public_key->kappa_p;
  hello.session_id = options.session_id;
  send_frame(fd, MsgType::hello, to_bytes(session_hello_to_json(hello)), transcript);

  auto [ack_type, ack_payload] = recv_frame(fd, options.timeout_ms, transcript);
  if (ack_type == MsgType::error) {
    fail("protocol", "peer rejected the session: " + to_string_payload(ack_payload));
  }
  if (ack_type != MsgType::hello_ack) fail("protocol", "expected HELLO_ACK");
  json ack = parse_json(to_string_payload(ack_payload));
  if (ack.value("status", "") != "ok" || ack.value("protocol_version", -1) != kProtocolVersion) {
    fail("protocol", "peer acknowledged with an unusable session");
  }

  const int m = session.format.m;
  const int T = session.T;
  SimulationTrace trace;
  trace.n_x = plant.n_x();
  trace.n_c = n_c;
  trace.n_u = plant.n_u();
  trace.rows.reserve(static_cast<std::size_t>(options.horizon));

  PlantState ps{plant.x0, 0};
  for (long k = 0; k < options.horizon; ++k) {
    TraceRow row;
    row.k = k;
    row.x = ps.x;
    row.norm_x = norm2(ps.x);
    // The controller state lives encrypted on the peer; this side never
    // observes it, so the trace keeps zeros in those columns.
    row.xc = Vector(n_c, 0.0);

    Vector y = output(ps, plant);
    std::vector<Ciphertext> y_enc;
    y_enc.reserve(y.size());
    for (double v : y) {
      FixedPointScalar s = proj(v, session.format);
      row.overflow = row.overflow || s.saturated;
      y_enc.push_back(
          encrypt(embed_signed(s.raw, *session.public_key), *session.public_key, rng));
    }
    send_frame(fd, MsgType::sensor_data,
               encode_step_payload(static_cast<std::uint64_t>(k), y_enc), transcript);

    auto [type, payload] = recv_frame(fd, options.timeout_ms, transcript);
    if (type == MsgType::error) {
      fail("protocol", "peer reported an error: " + to_string_payload(payload));
    }
    if (type != MsgType::control_data) fail("protocol", "expected CONTROL_DATA");
    auto [ret_k, u_enc] = decode_step_payload(payload, *session.public_key);
    if (static_cast<long>(ret_k) != k) fail("protocol", "control frame out of sequence");
    if (u_enc.size() != plant.n_u()) fail("protocol", "control count mismatch");

    auto budgets = bit_growth(k, T, session.format.n, m, static_cast<int>(n_c),
                              static_cast<int>(plant.n_y()));
    const int u_scale = m * static_cast<int>(k % T + 2);
    Vector u(u_enc.size(), 0.0);
    for (std::size_t i = 0; i < u_enc.size(); ++i) {
      Bigint w = decrypt_to_ring(u_enc[i], *session.public_key, *session.private_key,
                                 session.ring);
      if (exceeds_budget(w, session.ring, budgets.second.integer_bits)) {
        // Implausible width: reject the command and hold zero actuation.
        row.overflow = true;
        u[i] = 0.0;
      } else {
        u[i] = from_ring(w, u_scale, session.ring);
      }
    }

    row.u = u;
    row.norm_xc = 0.0;
    trace.any_overflow = trace.any_overflow || row.overflow;
    trace.rows.push_back(row);
    ps = step(ps, u, plant);
  }

  send_frame(fd, MsgType::shutdown, {}, transcript);
  return trace;
}

}  // namespace ectrl
