#include <doctest.h>

#include <algorithm>
#include <functional>
#include <future>
#include <random>

#include "scenesim/errors.hpp"
#include "scenesim/protocol.hpp"

using namespace scenesim;
using namespace scenesim::protocol;
using namespace std::chrono_literals;

namespace {

nlohmann::json random_json(std::mt19937_64& gen, int depth) {
  std::uniform_int_distribution<int> kind(0, depth > 2 ? 3 : 5);
  std::uniform_real_distribution<double> real(-1e6, 1e6);
  std::uniform_int_distribution<int> small(0, 4);
  switch (kind(gen)) {
    case 0: return real(gen);
    case 1: return static_cast<long>(real(gen));
    case 2: {
      std::string s;
      static const char* pieces[] = {"a", "b", "\n", "\"", "\\", "\t", "{", "}", "é", "→"};
      for (int i = small(gen) * 3; i > 0; --i) s += pieces[gen() % 10];
      return s;
    }
    case 3: return small(gen) % 2 == 0;
    case 4: {
      auto a = nlohmann::json::array();
      for (int i = small(gen); i > 0; --i) a.push_back(random_json(gen, depth + 1));
      return a;
    }
    default: {
      auto o = nlohmann::json::object();
      for (int i = small(gen); i > 0; --i) o["k" + std::to_string(i)] = random_json(gen, depth + 1);
      return o;
    }
  }
}

std::string error_text(const std::function<void()>& f, ErrorCode expected) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.code() == expected);
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

// Server side on a background thread; the test drives a raw client socket.
struct Harness {
  Listener listener{Endpoint{"127.0.0.1", 0}};
  std::future<std::unique_ptr<Session>> server;
  LineSocket client;

  Harness() {
    server = std::async(std::launch::async, [this] { return Session::open(listener, 5s); });
    client = connect_to({"127.0.0.1", listener.port()});
  }
  std::unique_ptr<Session> hello() {
    client.send({MessageKind::kHello, "", 0, {{"version", "1"}}});
    const Message ack = client.receive(5s);
    CHECK(ack.kind == MessageKind::kHello);
    CHECK(ack.payload["ack"] == true);
    return server.get();
  }
};

}  // namespace

TEST_CASE("encode/decode round trip") {
  std::mt19937_64 gen(3);
  const MessageKind kinds[] = {MessageKind::kHello, MessageKind::kReset, MessageKind::kObserve,
                               MessageKind::kAct,   MessageKind::kBye,   MessageKind::kError};
  for (int k = 0; k < 1000; ++k) {
    Message m;
    m.kind = kinds[k % 6];
    m.episode_id = "ep" + std::to_string(gen() % 100);
    m.tick = static_cast<long>(gen() % 100000);
    for (int i = 0; i < 3; ++i) m.payload["f" + std::to_string(i)] = random_json(gen, 0);
    const std::string line = encode(m);
    CHECK(line.back() == '\n');
    CHECK(std::count(line.begin(), line.end(), '\n') == 1);
    CHECK(decode(line) == m);
  }
}

TEST_CASE("decode errors carry line and offset") {
  const auto empty = error_text([] { decode("", 7); }, ErrorCode::kProtocol);
  CHECK(empty.find("line 7") != std::string::npos);
  const auto foo = error_text([] { decode(R"({"kind":"Foo"})"); }, ErrorCode::kProtocol);
  CHECK(foo.find("Foo") != std::string::npos);
  const auto bad = error_text([] { decode(R"({"kind":"Act",,})", 3); }, ErrorCode::kProtocol);
  CHECK(bad.find("line 3") != std::string::npos);
  CHECK(bad.find("offset 14") != std::string::npos);
  error_text([] { decode("[1,2]"); }, ErrorCode::kProtocol);
  error_text([] { decode(R"({"kind":"Act","tick":"5"})"); }, ErrorCode::kProtocol);
  error_text([] { decode(R"({"kind":"Act","payload":[]})"); }, ErrorCode::kProtocol);
  const Message minimal = decode(R"({"kind":"Bye"})");
  CHECK(minimal.kind == MessageKind::kBye);
  CHECK(minimal.tick == 0);
  CHECK(minimal.payload.is_object());
}

TEST_CASE("endpoint parsing and environment fallback") {
  const auto ep = parse_endpoint("0.0.0.0:9000");
  CHECK(ep.host == "0.0.0.0");
  CHECK(ep.port == 9000);
  CHECK_THROWS_AS(parse_endpoint("h:notaport"), Error);
  CHECK_THROWS_AS(parse_endpoint("h:70000"), Error);
  setenv(kHostEnv, "10.1.2.3", 1);
  setenv(kPortEnv, "4242", 1);
  const auto env = parse_endpoint("");
  CHECK(env.host == "10.1.2.3");
  CHECK(env.port == 4242);
  unsetenv(kHostEnv);
  unsetenv(kPortEnv);
  CHECK(parse_endpoint("").port == kDefaultPort);
}

TEST_CASE("handshake acknowledges version 1") {
  Harness h;
  auto session = h.hello();
  session->reset("ep1", {{"inline_raster", false}});
  const Message reset = h.client.receive(5s);
  CHECK(reset.kind == MessageKind::kReset);
  CHECK(reset.episode_id == "ep1");
}

TEST_CASE("version mismatch is rejected and the connection closed") {
  Harness h;
  h.client.send({MessageKind::kHello, "", 0, {{"version", "2"}}});
  const Message err = h.client.receive(5s);
  CHECK(err.kind == MessageKind::kError);
  CHECK(err.payload["message"].get<std::string>().find("version mismatch") != std::string::npos);
  error_text([&] { h.server.get(); }, ErrorCode::kProtocol);
  error_text([&] { h.client.receive(2s); }, ErrorCode::kPlannerDisconnect);
}

TEST_CASE("Observe is answered by the matching Act") {
  Harness h;
  auto session = h.hello();
  session->reset("ep", {});
  CHECK(h.client.receive(5s).kind == MessageKind::kReset);
  auto reply = std::async(std::launch::async, [&] { return session->request(5, {{"command", "Left"}}); });
  const Message obs = h.client.receive(5s);
  CHECK(obs.kind == MessageKind::kObserve);
  CHECK(obs.tick == 5);
  CHECK(obs.payload["command"] == "Left");
  h.client.send({MessageKind::kAct, "ep", 5, {{"a", 0.0}, {"delta", 0.0}}});
  const auto act = reply.get();
  CHECK(act["a"] == 0.0);
  CHECK(act["delta"] == 0.0);
}

TEST_CASE("tick mismatch aborts with an Error message") {
  Harness h;
  auto session = h.hello();
  auto reply = std::async(std::launch::async, [&] { return session->request(10, {}); });
  CHECK(h.client.receive(5s).tick == 10);
  h.client.send({MessageKind::kAct, "", 11, {{"a", 0.0}, {"delta", 0.0}}});
  const Message err = h.client.receive(5s);
  CHECK(err.kind == MessageKind::kError);
  CHECK(err.payload["message"].get<std::string>().find("tick mismatch") != std::string::npos);
  const auto what = error_text([&] { reply.get(); }, ErrorCode::kProtocol);
  CHECK(what.find("tick mismatch") != std::string::npos);
  error_text([&] { session->request(20, {}); }, ErrorCode::kPlannerDisconnect);
}

TEST_CASE("malformed reply gets an Error with the byte offset") {
  Harness h;
  auto session = h.hello();
  auto reply = std::async(std::launch::async, [&] { return session->request(0, {}); });
  h.client.receive(5s);
  h.client.write_line("{\"kind\": \"Act\", oops}\n");
  const Message err = h.client.receive(5s);
  CHECK(err.kind == MessageKind::kError);
  CHECK(err.payload["message"].get<std::string>().find("offset") != std::string::npos);
  error_text([&] { reply.get(); }, ErrorCode::kProtocol);
}

TEST_CASE("missed deadline is a planner disconnect") {
  Harness h;
  auto session = h.hello();
  const auto t0 = std::chrono::steady_clock::now();
  error_text([&] { session->request(0, {}, 200ms); }, ErrorCode::kPlannerDisconnect);
  CHECK(std::chrono::steady_clock::now() - t0 < 3s);
}

TEST_CASE("client loop alternates Observe and Act until Bye") {
  Listener listener{Endpoint{"127.0.0.1", 0}};
  auto client = std::async(std::launch::async, [&] {
    return run_client({"127.0.0.1", listener.port()}, [](const Message& m) {
      return ControlAction{0.1 * static_cast<double>(m.tick), 0.0};
    });
  });
  auto session = Session::open(listener, 5s);
  session->reset("alt", {});
  for (long t = 0; t < 50; t += 5) {
    const auto act = session->request(t, {});
    CHECK(act["a"].get<double>() == doctest::Approx(0.1 * t));
  }
  session->bye({{"status", "completed"}});
  const auto summary = client.get();
  CHECK(summary.observes == 10);
  CHECK(summary.bye["status"] == "completed");
}

TEST_CASE("external planner maps Act payloads to actions") {
  Listener listener{Endpoint{"127.0.0.1", 0}};
  auto client = std::async(std::launch::async, [&] {
    return run_client({"127.0.0.1", listener.port()}, [](const Message& m) {
      CHECK(m.payload.contains("raster_b64"));
      CHECK(m.payload["ego"]["v"] == 3.0);
      return ControlAction{20.0, -0.2};
    });
  });
  auto session = Session::open(listener, 5s);
  ExternalPlanner planner(*session, true, std::filesystem::temp_directory_path());
  PlannerInput in;
  in.ego.v = 3.0;
  auto frame = std::make_shared<ObservationFrame>();
  frame->rows = frame->cols = 4;
  frame->cells.assign(16, 1);
  in.observation = frame;
  const auto a = planner.plan(in);
  CHECK(a.accel == ControlAction::kMaxAccel);
  CHECK(a.steer == doctest::Approx(-0.2));
  CHECK_FALSE(planner.last_trajectory().has_value());
  session->bye({});
  CHECK(client.get().observes == 1);
}

TEST_CASE("connecting to a closed port fails") {
  int port = 0;
  {
    Listener l{Endpoint{"127.0.0.1", 0}};
    port = l.port();
  }
  error_text([&] { connect_to({"127.0.0.1", port}, 300ms); }, ErrorCode::kIo);
}
