#include "scenesim/protocol.hpp"

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>

#include "scenesim/errors.hpp"
#include "scenesim/io.hpp"

namespace scenesim::protocol {

using Clock = std::chrono::steady_clock;
using std::chrono::milliseconds;

namespace {

constexpr std::size_t kMaxLineBytes = 64u << 20;

struct KindName {
  MessageKind kind;
  const char* name;
};
constexpr KindName kKinds[] = {
    {MessageKind::kHello, "Hello"}, {MessageKind::kReset, "Reset"}, {MessageKind::kObserve, "Observe"},
    {MessageKind::kAct, "Act"},     {MessageKind::kBye, "Bye"},     {MessageKind::kError, "Error"},
};

[[noreturn]] void fail(long line_no, std::size_t offset, const std::string& what) {
  throw Error(ErrorCode::kProtocol,
              "line " + std::to_string(line_no) + ", offset " + std::to_string(offset) + ": " + what);
}

std::string errno_text() { return std::strerror(errno); }

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const int rc = getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) throw Error(ErrorCode::kIo, "cannot resolve " + ep.host + ": " + gai_strerror(rc));
  return res;
}

long remaining_ms(Clock::time_point until) {
  return std::max<long>(0, std::chrono::duration_cast<milliseconds>(until - Clock::now()).count());
}

}  // namespace

const char* to_string(MessageKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "Error";
}

std::string encode(const Message& m) {
  nlohmann::json j = {{"kind", to_string(m.kind)}, {"episode_id", m.episode_id}, {"tick", m.tick},
                    {"payload", m.payload.is_null() ? nlohmann::json::object() : m.payload}};
  // dump() escapes control characters, so the only raw newline is the frame end.
  return j.dump() + "\n";
}

Message decode(std::string_view line, long line_no) {
  if (!line.empty() && line.back() == '\n') line.remove_suffix(1);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.empty()) fail(line_no, 0, "empty message");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    fail(line_no, e.byte > 0 ? e.byte - 1 : 0, "malformed JSON");
  }
  if (!j.is_object()) fail(line_no, 0, "message must be a JSON object");

  Message m;
  const auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) fail(line_no, 0, "missing string field \"kind\"");
  const std::string name = kind->get<std::string>();
  bool known = false;
  for (const auto& k : kKinds) {
    if (name == k.name) {
      m.kind = k.kind;
      known = true;
    }
  }
  if (!known) fail(line_no, 0, "unknown message kind \"" + name + "\"");

  const auto ep = j.find("episode_id");
  if (ep != j.end()) {
    if (!ep->is_string()) fail(line_no, 0, "\"episode_id\" must be a string");
    m.episode_id = ep->get<std::string>();
  }
  const auto tick = j.find("tick");
  if (tick != j.end()) {
    if (!tick->is_number_integer()) fail(line_no, 0, "\"tick\" must be an integer");
    m.tick = tick->get<long>();
  }
  const auto payload = j.find("payload");
  if (payload != j.end()) {
    if (!payload->is_object()) fail(line_no, 0, "\"payload\" must be an object");
    m.payload = *payload;
  }
  return m;
}

Endpoint parse_endpoint(const std::string& spec) {
  if (spec.empty()) return endpoint_from_env();
  Endpoint ep;
  const auto colon = spec.rfind(':');
  if (colon == std::string::npos) {
    ep.host = spec;
    return ep;
  }
  ep.host = spec.substr(0, colon);
  try {
    std::size_t used = 0;
    ep.port = std::stoi(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw Error(ErrorCode::kConfig, "invalid endpoint \"" + spec + "\"");
  }
  if (ep.port < 0 || ep.port > 65535) throw Error(ErrorCode::kConfig, "port out of range in \"" + spec + "\"");
  return ep;
}

Endpoint endpoint_from_env() {
  Endpoint ep;
  if (const char* host = std::getenv(kHostEnv); host && *host) ep.host = host;
  if (const char* port = std::getenv(kPortEnv); port && *port) ep.port = parse_endpoint("h:" + std::string(port)).port;
  return ep;
}

LineSocket::LineSocket(LineSocket&& o) noexcept
    : fd_(o.fd_), buffer_(std::move(o.buffer_)), lines_read_(o.lines_read_) {
  o.fd_ = -1;
}

LineSocket& LineSocket::operator=(LineSocket&& o) noexcept {
  if (this != &o) {
    close();
    fd_ = o.fd_;
    buffer_ = std::move(o.buffer_);
    lines_read_ = o.lines_read_;
    o.fd_ = -1;
  }
  return *this;
}

LineSocket::~LineSocket() { close(); }

void LineSocket::close() {
  if (fd_ >= 0) {
    ::shutdown(fd_, SHUT_RDWR);
    ::close(fd_);
    fd_ = -1;
  }
}

std::optional<std::string> LineSocket::read_line(milliseconds timeout) {
  if (fd_ < 0) throw Error(ErrorCode::kPlannerDisconnect, "socket is closed");
  const auto until = Clock::now() + timeout;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    if (buffer_.size() > kMaxLineBytes) throw Error(ErrorCode::kProtocol, "message exceeds 64 MiB");
    pollfd pfd{fd_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(remaining_ms(until)));
    if (rc < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kPlannerDisconnect, "poll failed: " + errno_text());
    }
    if (rc == 0) return std::nullopt;
    char chunk[65536];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kPlannerDisconnect, "recv failed: " + errno_text());
    }
    if (n == 0) throw Error(ErrorCode::kPlannerDisconnect, "peer closed the connection");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void LineSocket::write_line(const std::string& encoded) {
  if (fd_ < 0) throw Error(ErrorCode::kPlannerDisconnect, "socket is closed");
  std::size_t sent = 0;
  while (sent < encoded.size()) {
    const ssize_t n = ::send(fd_, encoded.data() + sent, encoded.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw Error(ErrorCode::kPlannerDisconnect, "send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

Message LineSocket::receive(milliseconds timeout) {
  auto line = read_line(timeout);
  if (!line) {
    throw Error(ErrorCode::kPlannerDisconnect,
                "no message within " + std::to_string(timeout.count()) + " ms");
  }
  return decode(*line, ++lines_read_);
}

Listener::Listener(const Endpoint& ep) {
  addrinfo* res = resolve(ep, true);
  fd_ = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
  if (fd_ < 0) {
    freeaddrinfo(res);
    throw Error(ErrorCode::kIo, "socket: " + errno_text());
  }
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  if (::bind(fd_, res->ai_addr, res->ai_addrlen) != 0 || ::listen(fd_, 4) != 0) {
    const std::string why = errno_text();
    freeaddrinfo(res);
    ::close(fd_);
    fd_ = -1;
    throw Error(ErrorCode::kIo, "cannot listen on " + ep.host + ":" + std::to_string(ep.port) + ": " + why);
  }
  freeaddrinfo(res);
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() {
  if (fd_ >= 0) ::close(fd_);
}

LineSocket Listener::accept(milliseconds timeout) {
  pollfd pfd{fd_, POLLIN, 0};
  int rc;
  do {
    rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
  } while (rc < 0 && errno == EINTR);
  if (rc <= 0) {
    throw Error(ErrorCode::kPlannerDisconnect,
                "no planner connected within " + std::to_string(timeout.count()) + " ms");
  }
  const int fd = ::accept(fd_, nullptr, nullptr);
  if (fd < 0) throw Error(ErrorCode::kIo, "accept: " + errno_text());
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return LineSocket(fd);
}

LineSocket connect_to(const Endpoint& ep, milliseconds timeout) {
  addrinfo* res = resolve(ep, false);
  const auto until = Clock::now() + timeout;
  for (;;) {
    const int fd = ::socket(res->ai_family, res->ai_socktype, res->ai_protocol);
    if (fd < 0) {
      freeaddrinfo(res);
      throw Error(ErrorCode::kIo, "socket: " + errno_text());
    }
    if (::connect(fd, res->ai_addr, res->ai_addrlen) == 0) {
      freeaddrinfo(res);
      const int one = 1;
      ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
      return LineSocket(fd);
    }
    const int err = errno;
    ::close(fd);
    if (err != ECONNREFUSED || Clock::now() >= until) {
      freeaddrinfo(res);
      throw Error(ErrorCode::kIo, "cannot connect to " + ep.host + ":" + std::to_string(ep.port) + ": " +
                                      (err == ECONNREFUSED ? "connection refused" : std::strerror(err)));
    }
    std::this_thread::sleep_for(milliseconds(20));
  }
}

std::unique_ptr<Session> Session::open(Listener& listener, milliseconds accept_timeout) {
  auto session = std::make_unique<Session>(listener.accept(accept_timeout));
  session->handshake(kActDeadline);
  return session;
}

Session::Session(LineSocket sock) : sock_(std::move(sock)) {
  worker_ = std::thread([this] { io_loop(); });
}

Session::~Session() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    stop_ = true;
  }
  cv_.notify_all();
  if (worker_.joinable()) worker_.join();
}

void Session::handshake(milliseconds timeout) {
  const Message hello = sock_.receive(timeout);
  if (hello.kind != MessageKind::kHello) {
    sock_.send({MessageKind::kError, "", 0, {{"message", "expected Hello"}}});
    sock_.close();
    throw Error(ErrorCode::kProtocol, std::string("expected Hello, got ") + to_string(hello.kind));
  }
  const std::string version = hello.payload.value("version", std::string());
  if (version != kVersion) {
    sock_.send({MessageKind::kError, "", 0,
                {{"message", "version mismatch: server speaks " + std::string(kVersion) + ", client sent \"" + version + "\""}}});
    sock_.close();
    throw Error(ErrorCode::kProtocol, "version mismatch: client sent \"" + version + "\"");
  }
  sock_.send({MessageKind::kHello, "", 0, {{"version", kVersion}, {"ack", true}}});
}

void Session::reset(const std::string& episode_id, const nlohmann::json& payload) {
  std::lock_guard<std::mutex> lock(mu_);
  episode_id_ = episode_id;
  sock_.send({MessageKind::kReset, episode_id, 0, payload});
}

nlohmann::json Session::request(long tick, const nlohmann::json& observe_payload, milliseconds deadline) {
  std::future<nlohmann::json> result;
  {
    std::lock_guard<std::mutex> lock(mu_);
    if (broken_) throw Error(ErrorCode::kPlannerDisconnect, "planner session is no longer usable");
    if (slot_) throw Error(ErrorCode::kProtocol, "a request is already in flight");
    slot_.emplace(Pending{tick, encode({MessageKind::kObserve, episode_id_, tick, observe_payload}), deadline, {}});
    result = slot_->result.get_future();
  }
  cv_.notify_all();
  return result.get();
}

void Session::bye(const nlohmann::json& summary) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!broken_ && sock_.is_open()) {
    try {
      sock_.send({MessageKind::kBye, episode_id_, 0, summary});
    } catch (const Error&) {
      // The planner may already be gone; nothing left to tell it.
    }
  }
}

void Session::io_loop() {
  for (;;) {
    std::unique_lock<std::mutex> lock(mu_);
    cv_.wait(lock, [this] { return stop_ || slot_.has_value(); });
    if (stop_) return;
    Pending& p = *slot_;
    // Faults on our side of the exchange are reported back to the planner.
    auto reject = [&](const std::string& message) {
      try {
        sock_.send({MessageKind::kError, episode_id_, p.tick, {{"message", message}}});
      } catch (const Error&) {
      }
      throw Error(ErrorCode::kProtocol, message);
    };
    try {
      sock_.write_line(p.line);
      Message reply;
      try {
        reply = sock_.receive(p.deadline);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kProtocol) throw;
        reject(e.what());
      }
      if (reply.kind == MessageKind::kError) {
        throw Error(ErrorCode::kProtocol, "planner reported: " + reply.payload.value("message", std::string("error")));
      }
      if (reply.kind != MessageKind::kAct) reject(std::string("expected Act, got ") + to_string(reply.kind));
      if (reply.tick != p.tick) {
        reject("tick mismatch: expected " + std::to_string(p.tick) + ", got " + std::to_string(reply.tick));
      }
      p.result.set_value(reply.payload);
    } catch (...) {
      broken_ = true;
      p.result.set_exception(std::current_exception());
    }
    slot_.reset();
  }
}

nlohmann::json observe_payload(const PlannerInput& input, const std::optional<std::string>& frame_path,
                               const std::optional<std::string>& raster_b64) {
  nlohmann::json p = {
      {"ego", {{"x", input.ego.x}, {"y", input.ego.y}, {"phi", input.ego.heading}, {"v", input.ego.v}}},
      {"command", to_string(input.command)}};
  if (frame_path) p["frame"] = *frame_path;
  if (raster_b64) p["raster_b64"] = *raster_b64;
  return p;
}

ExternalPlanner::ExternalPlanner(Session& session, bool inline_raster, std::filesystem::path frame_dir)
    : session_(session), inline_raster_(inline_raster), frame_dir_(std::move(frame_dir)) {}

ControlAction ExternalPlanner::plan(const PlannerInput& input) {
  input.validate();
  if (!input.observation) throw Error(ErrorCode::kValidation, "external planner needs an observation");
  const ObservationFrame& frame = *input.observation;
  std::optional<std::string> path, raster;
  if (inline_raster_) {
    raster = io::base64_encode(frame_pgm(frame));
  } else {
    const std::string stem = frame_stem(frame.tick);
    write_frame(frame, frame_dir_, stem);
    path = (frame_dir_ / (stem + ".pgm")).string();
  }
  const nlohmann::json act = session_.request(input.tick, observe_payload(input, path, raster));
  if (!act.contains("a") || !act["a"].is_number() || !act.contains("delta") || !act["delta"].is_number()) {
    throw Error(ErrorCode::kProtocol, "Act payload needs numeric \"a\" and \"delta\"");
  }
  trajectory_.reset();
  if (act.contains("trajectory")) {
    const auto& t = act["trajectory"];
    if (!t.is_array() || t.size() != 6) throw Error(ErrorCode::kProtocol, "Act trajectory must hold 6 points");
    std::array<Vec2, 6> pts;
    for (std::size_t i = 0; i < 6; ++i) pts[i] = {t[i].at(0).get<double>(), t[i].at(1).get<double>()};
    trajectory_ = pts;
  }
  return ControlAction{act["a"].get<double>(), act["delta"].get<double>()}.clamped();
}

ClientSummary run_client(const Endpoint& ep, const ClientPolicy& policy, milliseconds timeout) {
  LineSocket sock = connect_to(ep, timeout);
  sock.send({MessageKind::kHello, "", 0, {{"version", kVersion}}});
  const Message ack = sock.receive(timeout);
  if (ack.kind != MessageKind::kHello) {
    throw Error(ErrorCode::kProtocol, "handshake rejected: " + ack.payload.value("message", std::string()));
  }
  ClientSummary summary;
  for (;;) {
    const Message m = sock.receive(timeout);
    switch (m.kind) {
      case MessageKind::kReset:
      case MessageKind::kHello:
        break;
      case MessageKind::kObserve: {
        const ControlAction a = policy(m);
        sock.send({MessageKind::kAct, m.episode_id, m.tick, {{"a", a.accel}, {"delta", a.steer}}});
        ++summary.observes;
        break;
      }
      case MessageKind::kBye:
        summary.bye = m.payload;
        return summary;
      case MessageKind::kError:
        throw Error(ErrorCode::kProtocol, "server reported: " + m.payload.value("message", std::string()));
      case MessageKind::kAct:
        throw Error(ErrorCode::kProtocol, "unexpected Act from server");
    }
  }
}

}  // namespace scenesim::protocol
