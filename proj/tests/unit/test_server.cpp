#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "icsrange/game/server.hpp"

using namespace icsrange;
using namespace icsrange::game;
using nlohmann::json;

namespace {

std::vector<Challenge> pack() {
  return {{"c1", Category::misc, 250, "one", "find it", {"look closer"}, "CTF{one}", true},
          {"c2", Category::plc, 100, "two", "", {}, "CTF{two}", true},
          {"c3", Category::trivia, 10, "hidden", "", {}, "CTF{three}", false}};
}

class ApiTest : public ::testing::Test {
 protected:
  void start(RangeHost* range) {
    game = std::make_unique<Game>(pack(), std::vector<Team>{{"A", "Alpha", "tok-a"}, {"B", "Beta", "tok-b"}});
    api = std::make_unique<ApiServer>(*game, range, [this] { return clock; });
    api->mount(server);
    port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  void TearDown() override {
    server.stop();
    if (thread.joinable()) thread.join();
  }

  httplib::Headers auth(const std::string& token) { return {{"Authorization", "Bearer " + token}}; }

  httplib::Result post(const std::string& path, const json& body, const std::string& token = "") {
    return client->Post(path, token.empty() ? httplib::Headers{} : auth(token), body.dump(),
                        "application/json");
  }
  httplib::Result get(const std::string& path, const std::string& token = "") {
    return client->Get(path, token.empty() ? httplib::Headers{} : auth(token));
  }

  double clock = 1000.0;
  std::unique_ptr<Game> game;
  std::unique_ptr<ApiServer> api;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::unique_ptr<httplib::Client> client;
};

json body(const httplib::Result& r) { return json::parse(r->body); }

}  // namespace

TEST_F(ApiTest, FlagSubmissionAndAuth) {
  start(nullptr);
  auto r = post("/api/flags", {{"challenge", "c1"}, {"flag", "CTF{one}"}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 401);
  EXPECT_EQ(post("/api/flags", {{"challenge", "c1"}, {"flag", "CTF{one}"}}, "bogus")->status, 401);

  r = post("/api/flags", {{"challenge", "c1"}, {"flag", "CTF{one}"}}, "tok-a");
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(body(r)["verdict"], "CORRECT");
  EXPECT_EQ(body(r)["points_awarded"], 250);
  EXPECT_EQ(body(r)["total"], 250);
  EXPECT_EQ(body(post("/api/flags", {{"challenge", "c1"}, {"flag", "CTF{one}"}}, "tok-a"))["verdict"],
            "DUPLICATE");
  EXPECT_EQ(post("/api/flags", {{"challenge", "c1"}}, "tok-a")->status, 400);
  EXPECT_EQ(client->Post("/api/flags", auth("tok-a"), "not json", "application/json")->status, 400);
  EXPECT_EQ(post("/api/flags", {{"challenge", "zz"}, {"flag", "CTF{x}"}}, "tok-a")->status, 404);
  EXPECT_EQ(post("/api/flags", {{"challenge", "c3"}, {"flag", "CTF{three}"}}, "tok-a")->status, 403);
}

TEST_F(ApiTest, LockoutOverHttp) {
  start(nullptr);
  for (int i = 0; i < 5; ++i) {
    clock += 1;
    EXPECT_EQ(body(post("/api/flags", {{"challenge", "c2"}, {"flag", "CTF{no}"}}, "tok-b"))["verdict"], "WRONG");
  }
  clock += 1;
  auto r = body(post("/api/flags", {{"challenge", "c2"}, {"flag", "CTF{two}"}}, "tok-b"));
  EXPECT_EQ(r["verdict"], "LOCKED");
  EXPECT_DOUBLE_EQ(r["locked_until"].get<double>(), clock + 300);
  clock += 300;
  EXPECT_EQ(body(post("/api/flags", {{"challenge", "c2"}, {"flag", "CTF{two}"}}, "tok-b"))["verdict"], "CORRECT");
}

TEST_F(ApiTest, SubmissionsVisibility) {
  start(nullptr);
  post("/api/flags", {{"challenge", "c1"}, {"flag", "CTF{one}"}}, "tok-a");
  post("/api/flags", {{"challenge", "c2"}, {"flag", "CTF{bad}"}}, "tok-b");
  auto own = body(get("/api/submissions", "tok-a"));
  ASSERT_EQ(own.size(), 1u);
  EXPECT_EQ(own[0]["team"], "A");
  EXPECT_EQ(body(get("/api/submissions", "judge")).size(), 2u);
  EXPECT_EQ(get("/api/submissions")->status, 401);
}

TEST_F(ApiTest, ChallengesHideSecrets) {
  start(nullptr);
  post("/api/flags", {{"challenge", "c1"}, {"flag", "CTF{one}"}}, "tok-a");
  auto list = body(get("/api/challenges", "tok-a"));
  ASSERT_EQ(list.size(), 2u);
  EXPECT_FALSE(list.dump().find("CTF{") != std::string::npos);
  EXPECT_FALSE(list.dump().find("look closer") != std::string::npos);
  EXPECT_EQ(list[0]["hints"], 1);
  EXPECT_TRUE(list[0]["solved"].get<bool>());
  EXPECT_FALSE(body(get("/api/challenges"))[0]["solved"].get<bool>());

  EXPECT_EQ(body(get("/api/challenges/c1/hints/0", "tok-a"))["hint"], "look closer");
  EXPECT_EQ(get("/api/challenges/c1/hints/0")->status, 401);
  EXPECT_EQ(get("/api/challenges/c1/hints/5", "tok-a")->status, 404);
}

TEST_F(ApiTest, ScoreboardShape) {
  start(nullptr);
  clock = 3600;
  post("/api/flags", {{"challenge", "c1"}, {"flag", "CTF{one}"}}, "tok-a");
  clock = 7200;
  post("/api/flags", {{"challenge", "c2"}, {"flag", "CTF{two}"}}, "tok-a");
  auto s = body(get("/api/scoreboard?from=0&to=10000"));
  EXPECT_EQ(s["totals"]["A"], 350);
  EXPECT_EQ(s["totals"]["B"], 0);
  auto a = s["series"]["A"];
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[1], json({3600.0, 250}));
  EXPECT_EQ(a[3], json({10000.0, 350}));
  EXPECT_DOUBLE_EQ(s["time_spent_hours"]["A"].get<double>(), 1.0);
  EXPECT_EQ(s["teams"].size(), 2u);
  EXPECT_EQ(get("/api/scoreboard?from=abc")->status, 400);
}

TEST_F(ApiTest, LiveRoutesWithoutRange) {
  start(nullptr);
  EXPECT_EQ(get("/api/hmi/state")->status, 503);
  EXPECT_EQ(body(get("/api/alarms")).size(), 0u);
  EXPECT_EQ(get("/api/alarms?rule=NOPE")->status, 400);
  EXPECT_EQ(get("/api/alarms?from=x")->status, 400);
  EXPECT_EQ(post("/api/sessions", {{"team", "A"}}, "tok-a")->status, 401);
  auto s = post("/api/sessions", {{"team", "A"}, {"start", 0}}, "judge");
  ASSERT_EQ(s->status, 201);
  const std::string sid = body(s)["id"];
  EXPECT_EQ(post("/api/sessions/" + sid + "/declarations", {{"profile", "strong"}, {"goal", "pump"}}, "tok-b")->status,
            403);
  EXPECT_EQ(post("/api/sessions/nope/declarations", {{"profile", "strong"}, {"goal", "pump"}}, "tok-a")->status,
            404);
  EXPECT_EQ(post("/api/sessions/" + sid + "/declarations",
                 {{"profile", "insider"}, {"goal", "plc"}, {"scenario", "syn_flood_plc1"}}, "tok-a")
                ->status,
            403);
  auto d = post("/api/sessions/" + sid + "/declarations", {{"profile", "strong"}, {"goal", "pump"}}, "tok-a");
  ASSERT_EQ(d->status, 201);
  const std::string did = body(d)["id"];
  EXPECT_EQ(post("/api/sessions/" + sid + "/declarations", {{"profile", "strong"}, {"goal", "pump"}}, "tok-a")->status,
            409);
  EXPECT_EQ(post("/api/declarations/" + did + "/adjudicate", {{"c", "0.5"}}, "tok-a")->status, 401);
  EXPECT_EQ(post("/api/declarations/" + did + "/adjudicate", {{"c", "0.33"}, {"undo_confirmed", true}}, "judge")->status,
            400);
  EXPECT_EQ(post("/api/declarations/" + did + "/adjudicate", {{"c", "abc"}, {"undo_confirmed", true}}, "judge")->status,
            400);
  auto a = post("/api/declarations/" + did + "/adjudicate", {{"c", "0.5"}, {"undo_confirmed", true}}, "judge");
  ASSERT_EQ(a->status, 200);
  EXPECT_EQ(body(a)["status"], "scored");
  EXPECT_EQ(body(a)["points"], 130);
  EXPECT_EQ(body(a)["control"], "0.50");
  EXPECT_EQ(post("/api/declarations/" + did + "/adjudicate", {{"c", "0.5"}, {"undo_confirmed", true}}, "judge")->status,
            409);
  EXPECT_EQ(body(get("/api/scoreboard?from=0&to=2000"))["live"]["A"]["points"], 130);
}

TEST_F(ApiTest, RangeBackedSessionCountsItsAlarms) {
  RangeHost range;
  range.with([](testbed::Testbed& tb) {
    while (tb.time() < 5.0) tb.tick();
  });
  start(&range);
  auto sid = body(post("/api/sessions", {{"team", "A"}}, "judge"))["id"].get<std::string>();
  auto d = body(post("/api/sessions/" + sid + "/declarations",
                     {{"profile", "strong"}, {"goal", "tank_level"}}, "tok-a"));
  ASSERT_EQ(d["status"], "pending");
  range.with([](testbed::Testbed& tb) {
    ids::Alarm a;
    a.ts = tb.time() + 1;
    a.rule = ids::AlarmRule::invariant;
    a.source_node = "PLC1";
    a.severity = "high";
    tb.alarms().append(a);
    a.rule = ids::AlarmRule::tag_divergence;
    tb.alarms().append(a);
    while (tb.time() < 10.0) tb.tick();
  });
  auto alarms = body(get("/api/alarms?session=" + sid));
  EXPECT_EQ(alarms.size(), 2u);
  EXPECT_EQ(body(get("/api/alarms?rule=INVARIANT")).size(), 1u);
  auto out = body(post("/api/declarations/" + d["id"].get<std::string>() + "/adjudicate",
                       {{"c", 1}, {"undo_confirmed", true}}, "judge"));
  EXPECT_EQ(out["detections"], 2);
  EXPECT_EQ(out["score"], "800/3");
  EXPECT_EQ(out["points"], 267);
}

TEST_F(ApiTest, DeclarationBlockedBySessionAlarms) {
  RangeHost range;
  start(&range);
  auto sid = body(post("/api/sessions", {{"team", "B"}}, "judge"))["id"].get<std::string>();
  range.with([](testbed::Testbed& tb) {
    ids::Alarm a;
    a.ts = tb.time();
    a.rule = ids::AlarmRule::arp_poison;
    a.source_node = "IDS";
    a.severity = "high";
    tb.alarms().append(a);
  });
  EXPECT_EQ(post("/api/sessions/" + sid + "/declarations", {{"profile", "strong"}, {"goal", "pump"}}, "tok-b")->status,
            409);
}

TEST_F(ApiTest, HmiStateAndOverrideGating) {
  RangeHost range;
  range.with([](testbed::Testbed& tb) {
    while (tb.time() < 5.0) tb.tick();
  });
  start(&range);
  auto state = body(get("/api/hmi/state"));
  EXPECT_GT(state["tags"].size(), 0u);
  EXPECT_TRUE(state["tags"][0].contains("stale"));
  EXPECT_TRUE(state["tags"][0].contains("rendered"));

  json cmd = {{"actuator", "P101"}, {"command", "OFF"}, {"mode", "MANUAL"}};
  EXPECT_EQ(post("/api/hmi/override", cmd)->status, 401);
  EXPECT_EQ(post("/api/hmi/override", cmd, "tok-a")->status, 403);

  auto sid = body(post("/api/sessions", {{"team", "A"}}, "judge"))["id"].get<std::string>();
  post("/api/sessions/" + sid + "/declarations", {{"profile", "cybercriminal"}, {"goal", "pump"}}, "tok-a");
  EXPECT_EQ(post("/api/hmi/override", cmd, "tok-a")->status, 403);

  auto sid_b = body(post("/api/sessions", {{"team", "B"}}, "judge"))["id"].get<std::string>();
  post("/api/sessions/" + sid_b + "/declarations", {{"profile", "insider"}, {"goal", "pump"}}, "tok-b");
  EXPECT_EQ(post("/api/hmi/override", {{"actuator", "NOPE"}, {"command", "OFF"}}, "tok-b")->status, 400);
  EXPECT_EQ(post("/api/hmi/override", {{"actuator", "P101"}, {"mode", "SIDEWAYS"}}, "tok-b")->status, 400);
  auto ok = post("/api/hmi/override", cmd, "tok-b");
  ASSERT_EQ(ok->status, 200) << ok->body;
  range.with([](testbed::Testbed& tb) {
    const double until = tb.time() + 3;
    while (tb.time() < until) tb.tick();
    EXPECT_EQ(tb.plant().state().actuator("P101").mode, plant::ControlMode::manual);
    EXPECT_EQ(tb.plant().state().actuator("P101").state, plant::ActuatorState::off);
  });
}
