#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>

#include "mobsim/external.hpp"
#include "mock_server.hpp"

using namespace mobsim;
using mobsim::testing::MockServer;

namespace {

PromptSet users(int n) {
  PromptSet ps;
  for (int i = 0; i < n; ++i) {
    PromptDoc d;
    d.profile.id = "p" + std::to_string(i);
    d.profile.attributes = {{"occupation", std::string("student")}, {"age", 20.0 + i}};
    d.params.activity = default_activity();
    d.params.home_cell = {10 + i, 20 + i};
    d.params.num_days = 2;
    d.base_text = "Generate stays.";
    d.persona = "A student.";
    d.constraints = {"Nights at home."};
    ps.prompts.emplace(d.profile.id, d);
  }
  return ps;
}

EndpointConfig endpoint(const std::string& url) {
  EndpointConfig e;
  e.url = url;
  e.token = "secret";
  e.max_retries = 3;
  e.backoff_ms = 1;
  e.timeout_s = 5;
  return e;
}

MockServer::Reply ok(const Json& req) { return {200, MockServer::chat(MockServer::home_stay(req))}; }

}  // namespace

TEST_CASE("valid reply round trips to a one-stay trajectory") {
  Json seen;
  MockServer srv({{"/v1/chat", [&](const Json& req, int) {
                     seen = req;
                     return ok(req);
                   }}});
  const EndpointConfig cfg = endpoint(srv.url("/v1/chat"));
  HttpChatBackend backend(cfg);
  const GridSpec grid;
  const auto res = generate_external(users(1), grid, backend, cfg);
  const UserGeneration& u = res.users.at("p0");
  REQUIRE(u.status == GenerationStatus::Ok);
  CHECK(u.attempts == 1);
  REQUIRE(u.trajectory);
  REQUIRE(u.trajectory->stays.size() == 1);
  CHECK(u.trajectory->stays[0].cell == Cell{10, 20});
  CHECK(u.trajectory->stays[0].duration_slots == 48);
  CHECK(*u.trajectory->user_id == "p0");

  CHECK(seen.at("model") == cfg.model);
  REQUIRE(seen.at("messages").size() == 2);
  CHECK(seen["messages"][0]["role"] == "system");
  CHECK(seen["messages"][1]["role"] == "user");
  const std::string prompt = seen["messages"][1]["content"];
  CHECK(prompt.find("occupation: student") != std::string::npos);
  CHECK(prompt.find("Nights at home.") != std::string::npos);
  CHECK(srv.last_auth() == "Bearer secret");
}

TEST_CASE("malformed twice then valid succeeds on the third attempt") {
  MockServer srv({{"/chat", [](const Json& req, int call) -> MockServer::Reply {
                     if (call < 2) return {200, MockServer::chat("sorry, I cannot produce that")};
                     return ok(req);
                   }}});
  const EndpointConfig cfg = endpoint(srv.url("/chat"));
  HttpChatBackend backend(cfg);
  const auto res = generate_external(users(1), GridSpec{}, backend, cfg);
  const UserGeneration& u = res.users.at("p0");
  CHECK(u.status == GenerationStatus::Ok);
  CHECK(u.attempts == 3);
  CHECK(srv.calls("/chat") == 3);
}

TEST_CASE("permanent failures are reported per user and never abort the batch") {
  SUBCASE("server errors") {
    MockServer srv({{"/chat", [](const Json&, int) { return MockServer::Reply{500, "{}"}; }}});
    EndpointConfig cfg = endpoint(srv.url("/chat"));
    cfg.max_retries = 2;
    HttpChatBackend backend(cfg);
    const auto res = generate_external(users(3), GridSpec{}, backend, cfg);
    CHECK(res.failures() == 3);
    CHECK(res.trajectories().empty());
    for (const auto& [id, u] : res.users) {
      CHECK(u.status == GenerationStatus::BackendError);
      CHECK(u.attempts == 3);
    }
    CHECK(srv.calls("/chat") == 9);
  }
  SUBCASE("auth errors are not retried") {
    MockServer srv({{"/chat", [](const Json&, int) { return MockServer::Reply{401, "{}"}; }}});
    const EndpointConfig cfg = endpoint(srv.url("/chat"));
    HttpChatBackend backend(cfg);
    const auto res = generate_external(users(2), GridSpec{}, backend, cfg);
    for (const auto& [id, u] : res.users) {
      CHECK(u.status == GenerationStatus::BackendError);
      CHECK(u.attempts == 1);
    }
  }
  SUBCASE("malformed forever") {
    MockServer srv({{"/chat", [](const Json&, int) { return MockServer::Reply{200, MockServer::chat("[{\"day\": 0}]")}; }}});
    const EndpointConfig cfg = endpoint(srv.url("/chat"));
    HttpChatBackend backend(cfg);
    const auto res = generate_external(users(1), GridSpec{}, backend, cfg);
    CHECK(res.users.at("p0").status == GenerationStatus::ParseFailure);
    CHECK(res.users.at("p0").attempts == 4);
  }
  SUBCASE("nothing listening") {
    const EndpointConfig cfg = endpoint("http://127.0.0.1:" + std::to_string(mobsim::testing::closed_port()) + "/chat");
    HttpChatBackend backend(cfg);
    const auto res = generate_external(users(2), GridSpec{}, backend, cfg);
    CHECK(res.failures() == 2);
    for (const auto& [id, u] : res.users) CHECK(u.status == GenerationStatus::BackendError);
  }
}

TEST_CASE("rate limiting backs off and retries") {
  MockServer srv({{"/chat", [](const Json& req, int call) -> MockServer::Reply {
                     if (call == 0) return {429, "{}"};
                     return ok(req);
                   }}});
  const EndpointConfig cfg = endpoint(srv.url("/chat"));
  HttpChatBackend backend(cfg);
  const auto res = generate_external(users(1), GridSpec{}, backend, cfg);
  CHECK(res.users.at("p0").status == GenerationStatus::Ok);
  CHECK(res.users.at("p0").attempts == 2);
}

TEST_CASE("in-flight requests stay within the limit") {
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
  MockServer srv({{"/chat", [&](const Json& req, int) {
                     const int now = ++in_flight;
                     int p = peak.load();
                     while (now > p && !peak.compare_exchange_weak(p, now)) {
                     }
                     std::this_thread::sleep_for(std::chrono::milliseconds(20));
                     --in_flight;
                     return ok(req);
                   }}});
  EndpointConfig cfg = endpoint(srv.url("/chat"));
  cfg.max_in_flight = 2;
  HttpChatBackend backend(cfg);
  const auto res = generate_external(users(8), GridSpec{}, backend, cfg);
  CHECK(res.failures() == 0);
  CHECK(peak.load() <= 2);
  CHECK(peak.load() >= 1);
}

TEST_CASE("reply parsing") {
  const GridSpec grid;
  const std::string arr = R"([{"day":0,"start_slot":0,"duration_slots":10,"cell_x":1,"cell_y":2},
                              {"day":0,"start_slot":10,"duration_slots":5,"cell_x":3,"cell_y":2}])";
  auto s = parse_stays_reply(arr, grid, 1);
  REQUIRE(s.size() == 2);
  CHECK(s[1].start_slot == 10);
  CHECK(s[1].cell == Cell{3, 2});

  s = parse_stays_reply("Here you go:\n```json\n" + arr + "\n```", grid, 1);
  CHECK(s.size() == 2);
  s = parse_stays_reply(R"({"stays": [{"day":1,"start_slot":4,"duration_slots":2,"cell_x":0,"cell_y":0}]})", grid, 2);
  REQUIRE(s.size() == 1);
  CHECK(s[0].start_slot == 48 + 4);

  CHECK_THROWS_AS(parse_stays_reply("no json here", grid, 1), ParseError);
  CHECK_THROWS_AS(parse_stays_reply("[]", grid, 1), ParseError);
  // overlapping stays
  CHECK_THROWS_AS(parse_stays_reply(R"([{"day":0,"start_slot":0,"duration_slots":10,"cell_x":1,"cell_y":2},
                                        {"day":0,"start_slot":5,"duration_slots":5,"cell_x":3,"cell_y":2}])",
                                    grid, 1),
                  ParseError);
  // beyond the horizon
  CHECK_THROWS_AS(parse_stays_reply(R"([{"day":3,"start_slot":0,"duration_slots":1,"cell_x":1,"cell_y":2}])", grid, 1),
                  ParseError);
}

TEST_CASE("endpoint config and environment overrides") {
  Json j = {{"url", "http://a/b"}, {"token", "t"}, {"model", "m"}, {"max_in_flight", 3}, {"max_retries", 1}};
  EndpointConfig e = endpoint_from_json(j);
  CHECK(e.url == "http://a/b");
  CHECK(e.token == "t");
  CHECK(e.max_in_flight == 3);
  CHECK(!to_json(e).contains("token"));

  ::setenv("MOBSIM_ENDPOINT", "http://127.0.0.1:9/x", 1);
  ::setenv("MOBSIM_TOKEN", "envtoken", 1);
  apply_env_overrides(e);
  CHECK(e.url == "http://127.0.0.1:9/x");
  CHECK(e.token == "envtoken");
  ::unsetenv("MOBSIM_ENDPOINT");
  ::unsetenv("MOBSIM_TOKEN");
}

TEST_CASE("embedding backend") {
  MockServer srv({{"/embed", [](const Json& req, int) {
                     const std::string text = req.at("input");
                     return MockServer::Reply{
                         200, Json{{"data", Json::array({{{"embedding", {double(text.size()), 1.0, 0.5}}}})}}.dump()};
                   }}});
  EndpointConfig cfg = endpoint("");
  cfg.embedding_url = srv.url("/embed");
  HttpEmbeddingBackend b(cfg);
  const auto v = b.embed("abcd");
  CHECK(v == std::vector<double>{4.0, 1.0, 0.5});
}
