#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>

#include <nlohmann/json.hpp>

#include "scenesim/planners.hpp"

namespace scenesim::protocol {

inline constexpr const char* kVersion = "1";
inline constexpr int kDefaultPort = 7788;
inline constexpr const char* kHostEnv = "SCENESIM_PLANNER_HOST";
inline constexpr const char* kPortEnv = "SCENESIM_PLANNER_PORT";
inline constexpr std::chrono::milliseconds kActDeadline{5000};

enum class MessageKind { kHello, kReset, kObserve, kAct, kBye, kError };

const char* to_string(MessageKind kind);

struct Message {
  MessageKind kind{MessageKind::kHello};
  std::string episode_id;
  long tick{0};
  nlohmann::json payload = nlohmann::json::object();

  bool operator==(const Message& o) const {
    return kind == o.kind && episode_id == o.episode_id && tick == o.tick && payload == o.payload;
  }
};

// One JSON object plus a single trailing '\n'.
std::string encode(const Message& m);
// Throws Error(kProtocol) with the line number and byte offset of the fault.
Message decode(std::string_view line, long line_no = 1);

struct Endpoint {
  std::string host{"127.0.0.1"};
  int port{kDefaultPort};
};

// "host:port"; an empty spec falls back to the environment, then defaults.
Endpoint parse_endpoint(const std::string& spec);
Endpoint endpoint_from_env();

// Newline-framed socket. Reads honour a deadline; EOF raises kPlannerDisconnect.
class LineSocket {
 public:
  LineSocket() = default;
  explicit LineSocket(int fd) : fd_(fd) {}
  LineSocket(LineSocket&& o) noexcept;
  LineSocket& operator=(LineSocket&& o) noexcept;
  LineSocket(const LineSocket&) = delete;
  LineSocket& operator=(const LineSocket&) = delete;
  ~LineSocket();

  bool is_open() const { return fd_ >= 0; }
  // Empty on timeout.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);
  void write_line(const std::string& encoded);
  void send(const Message& m) { write_line(encode(m)); }
  // Reads and decodes one message; throws kPlannerDisconnect on timeout.
  Message receive(std::chrono::milliseconds timeout);
  void close();

 private:
  int fd_{-1};
  std::string buffer_;
  long lines_read_{0};
};

class Listener {
 public:
  explicit Listener(const Endpoint& ep);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  int port() const { return port_; }  // actual port, useful when binding port 0
  LineSocket accept(std::chrono::milliseconds timeout);

 private:
  int fd_{-1};
  int port_{0};
};

LineSocket connect_to(const Endpoint& ep, std::chrono::milliseconds timeout = std::chrono::seconds(5));

// Engine side of one planner connection. Socket traffic runs on a dedicated
// thread; the tick thread hands over at most one request at a time.
class Session {
 public:
  // Accepts a connection and completes the Hello exchange.
  static std::unique_ptr<Session> open(Listener& listener, std::chrono::milliseconds accept_timeout);
  explicit Session(LineSocket sock);
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  void handshake(std::chrono::milliseconds timeout);
  void reset(const std::string& episode_id, const nlohmann::json& payload);
  // Sends Observe(tick) and waits for the matching Act within `deadline`.
  // Returns the Act payload.
  nlohmann::json request(long tick, const nlohmann::json& observe_payload,
                         std::chrono::milliseconds deadline = kActDeadline);
  void bye(const nlohmann::json& summary);

 private:
  void io_loop();

  LineSocket sock_;
  std::string episode_id_;
  std::thread worker_;
  std::mutex mu_;
  std::condition_variable cv_;
  struct Pending {
    long tick;
    std::string line;
    std::chrono::milliseconds deadline;
    std::promise<nlohmann::json> result;
  };
  std::optional<Pending> slot_;
  bool stop_{false};
  bool broken_{false};
};

// Planner backed by a remote process over a Session.
class ExternalPlanner : public Planner {
 public:
  // Frames go inline as base64 PGM when `inline_raster`, else as a file path
  // under `frame_dir`.
  ExternalPlanner(Session& session, bool inline_raster, std::filesystem::path frame_dir);
  bool privileged() const override { return false; }
  void reset(const Route&) override { trajectory_.reset(); }
  ControlAction plan(const PlannerInput& input) override;
  std::optional<std::array<Vec2, 6>> last_trajectory() const override { return trajectory_; }

 private:
  Session& session_;
  bool inline_raster_;
  std::filesystem::path frame_dir_;
  std::optional<std::array<Vec2, 6>> trajectory_;
};

nlohmann::json observe_payload(const PlannerInput& input, const std::optional<std::string>& frame_path,
                               const std::optional<std::string>& raster_b64);

// Minimal planner client: handshake, then answer every Observe with `policy`
// until Bye. Returns the Bye payload.
struct ClientSummary {
  long observes{0};
  nlohmann::json bye;
};
using ClientPolicy = std::function<ControlAction(const Message& observe)>;
ClientSummary run_client(const Endpoint& ep, const ClientPolicy& policy,
                         std::chrono::milliseconds timeout = std::chrono::seconds(30));

}  // namespace scenesim::protocol
