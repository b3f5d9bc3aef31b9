#include "icsrange/game/server.hpp"

#include <chrono>

namespace icsrange::game {

using nlohmann::json;

RangeHost::RangeHost(testbed::TestbedConfig config, double speed)
    : testbed_(std::make_unique<testbed::Testbed>(std::move(config))), speed_(speed) {}

RangeHost::~RangeHost() { stop(); }

void RangeHost::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] {
    const auto origin = std::chrono::steady_clock::now();
    const double base = time();
    while (running_) {
      double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - origin).count();
      double target = base + wall * speed_;
      {
        std::lock_guard lock(mutex_);
        while (testbed_->time() + testbed_->config().dt <= target) testbed_->tick();
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  });
}

void RangeHost::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
}

double RangeHost::time() {
  std::lock_guard lock(mutex_);
  return testbed_->time();
}

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, {{"error", message}}, status);
}

std::string bearer(const httplib::Request& req) {
  auto h = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (h.rfind(prefix, 0) == 0) return h.substr(prefix.size());
  return {};
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  auto j = json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw GameError(400, "body must be a JSON object");
  return j;
}

std::string string_field(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw GameError(400, std::string("missing string field '") + key + "'");
  }
  return j[key];
}

std::optional<double> number_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  try {
    std::size_t used = 0;
    auto s = req.get_param_value(key);
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw GameError(400, std::string("parameter '") + key + "' must be a number");
  }
}

/// Wraps a handler so game errors become JSON responses.
httplib::Server::Handler guarded(std::function<void(const httplib::Request&, httplib::Response&)> fn) {
  return [fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const GameError& e) {
      send_error(res, e.status(), e.what());
    } catch (const ids::MalformedFilter& e) {
      send_error(res, 400, e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, e.what());
    }
  };
}

json view_json(const testbed::HmiView& v) {
  json age = std::isfinite(v.age) ? json(v.age) : json(nullptr);
  return {{"device", v.device}, {"tag", v.tag},     {"value", v.value},
          {"age", age},         {"stale", v.stale}, {"rendered", v.rendered}};
}

}  // namespace

ApiServer::ApiServer(Game& game, RangeHost* range, Clock clock)
    : game_(game), range_(range), clock_(std::move(clock)) {}

double ApiServer::now() const {
  if (clock_) return clock_();
  return std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
}

double ApiServer::live_now() const { return range_ ? range_->time() : now(); }

void ApiServer::mount(httplib::Server& server) {
  auto team_of = [this](const httplib::Request& req) {
    auto team = game_.authenticate(bearer(req));
    if (!team) throw GameError(401, "missing or invalid team token");
    return *team;
  };
  auto require_judge = [this](const httplib::Request& req) {
    if (!game_.is_judge(bearer(req))) throw GameError(401, "judge token required");
  };

  server.Post("/api/flags", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
    auto team = team_of(req);
    auto body = body_of(req);
    auto r = game_.submit(team.id, string_field(body, "challenge"), string_field(body, "flag"), now());
    json out = {{"verdict", to_string(r.verdict)}, {"points_awarded", r.points_awarded},
                {"total", r.total}};
    if (r.locked_until) out["locked_until"] = *r.locked_until;
    send_json(res, out);
  }));

  server.Get("/api/submissions", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
    json out = json::array();
    if (game_.is_judge(bearer(req))) {
      for (const auto& t : game_.teams()) {
        for (const auto& s : game_.submissions(t.id)) out.push_back(to_json(s));
      }
    } else {
      for (const auto& s : game_.submissions(team_of(req).id)) out.push_back(to_json(s));
    }
    send_json(res, out);
  }));

  server.Get("/api/scoreboard", guarded([this](const httplib::Request& req, httplib::Response& res) {
    const double from = number_param(req, "from").value_or(0.0);
    const double to = number_param(req, "to").value_or(now());
    send_json(res, scoreboard_json(game_, from, to));
  }));

  server.Get("/api/challenges", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::set<std::string> solved;
    if (auto team = game_.authenticate(bearer(req))) solved = game_.solved(team->id);
    json out = json::array();
    for (const auto& c : game_.challenges()) {
      if (!c.released) continue;
      out.push_back({{"id", c.id},
                     {"category", to_string(c.category)},
                     {"points", c.points},
                     {"title", c.title},
                     {"description", c.description},
                     {"hints", c.hints.size()},
                     {"solved", solved.contains(c.id)}});
    }
    send_json(res, out);
  }));

  server.Get(R"(/api/challenges/([^/]+)/hints/(\d+))",
             guarded([=, this](const httplib::Request& req, httplib::Response& res) {
               auto team = team_of(req);
               auto text = game_.hint(team.id, req.matches[1], std::stoul(req.matches[2]), now());
               send_json(res, {{"hint", text}});
             }));

  server.Post("/api/sessions", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
    require_judge(req);
    auto body = body_of(req);
    double start = body.contains("start") ? body["start"].get<double>() : live_now();
    auto session = game_.open_session(string_field(body, "team"), start);
    // Alarms raised from now on are attributed to this session.
    if (range_) range_->with([&](testbed::Testbed& tb) { tb.alarms().begin_session(session.id); });
    send_json(res, to_json(session), 201);
  }));

  server.Post(R"(/api/sessions/([^/]+)/declarations)",
              guarded([=, this](const httplib::Request& req, httplib::Response& res) {
                const std::string sid = req.matches[1];
                auto session = game_.session(sid);
                if (!session) throw GameError(404, "unknown session");
                if (!game_.is_judge(bearer(req)) && team_of(req).id != session->team) {
                  throw GameError(403, "session belongs to another team");
                }
                auto body = body_of(req);
                std::optional<std::string> scenario;
                if (body.contains("scenario") && !body["scenario"].is_null()) {
                  scenario = string_field(body, "scenario");
                }
                const std::string profile = string_field(body, "profile");
                const std::string goal = string_field(body, "goal");
                const double at = live_now();
                auto declare = [&](const ids::AlarmStore* alarms) {
                  return game_.declare(sid, profile, goal, scenario, at, alarms);
                };
                auto d = range_ ? range_->with([&](testbed::Testbed& tb) { return declare(&tb.alarms()); })
                                : declare(nullptr);
                send_json(res, to_json(d), 201);
              }));

  server.Post(R"(/api/declarations/([^/]+)/adjudicate)",
              guarded([=, this](const httplib::Request& req, httplib::Response& res) {
                require_judge(req);
                auto body = body_of(req);
                if (!body.contains("c")) throw GameError(400, "missing field 'c'");
                const auto& cj = body["c"];
                std::string ctext = cj.is_string() ? cj.get<std::string>() : cj.dump();
                score::Rational c;
                try {
                  c = score::parse_decimal(ctext);
                } catch (const std::exception& e) {
                  throw GameError(400, e.what());
                }
                const bool undo = body.value("undo_confirmed", false);
                const std::string id = req.matches[1];
                const double at = live_now();
                auto adjudicate = [&](const ids::AlarmStore& alarms) {
                  return game_.adjudicate(id, c, undo, at, alarms);
                };
                auto d = range_ ? range_->with([&](testbed::Testbed& tb) { return adjudicate(tb.alarms()); })
                                : adjudicate(empty_alarms_);
                send_json(res, to_json(d));
              }));

  server.Get("/api/alarms", guarded([this](const httplib::Request& req, httplib::Response& res) {
    std::map<std::string, std::string> params;
    for (const auto& [k, v] : req.params) params[k] = v;
    auto filter = ids::AlarmFilter::parse(params);
    auto collect = [&](const ids::AlarmStore& alarms) {
      json out = json::array();
      for (const auto& a : alarms.query(filter)) out.push_back(ids::to_json(a));
      return out;
    };
    json out = range_ ? range_->with([&](testbed::Testbed& tb) { return collect(tb.alarms()); })
                      : collect(empty_alarms_);
    send_json(res, out);
  }));

  server.Get("/api/hmi/state", guarded([this](const httplib::Request&, httplib::Response& res) {
    if (!range_) throw GameError(503, "no range attached");
    json out = range_->with([](testbed::Testbed& tb) {
      json tags = json::array();
      for (const auto& v : tb.hmi_state()) tags.push_back(view_json(v));
      return json{{"time", tb.time()}, {"staleness", tb.config().staleness}, {"tags", tags}};
    });
    send_json(res, out);
  }));

  server.Post("/api/hmi/override", guarded([=, this](const httplib::Request& req, httplib::Response& res) {
    auto team = team_of(req);
    auto profile_id = game_.active_profile(team.id);
    if (!profile_id) throw GameError(403, "declare an attack before using the HMI");
    const auto& profile = score::find_profile(*profile_id);
    if (!profile.capabilities.contains(score::Capability::admin_accounts) &&
        !profile.capabilities.contains(score::Capability::engineering_tools)) {
      throw GameError(403, "profile " + profile.id + " has no operator access");
    }
    if (!range_) throw GameError(503, "no range attached");
    auto body = body_of(req);
    const std::string actuator = string_field(body, "actuator");
    const std::string command = body.value("command", std::string());
    plant::ControlMode mode;
    try {
      mode = plant::parse_control_mode(body.value("mode", std::string("MANUAL")));
    } catch (const std::invalid_argument& e) {
      throw GameError(400, e.what());
    }
    bool ok = range_->with([&](testbed::Testbed& tb) {
      try {
        tb.owner_of(actuator);
      } catch (const std::out_of_range& e) {
        throw GameError(400, e.what());
      }
      tb.network().run_until(std::max(tb.network().now(), tb.time()));
      return tb.hmi_override(actuator, command, mode);
    });
    if (!ok) throw GameError(502, "the PLC did not accept the override");
    send_json(res, {{"ok", true}, {"actuator", actuator}, {"command", command},
                    {"mode", plant::to_string(mode)}});
  }));
}

}  // namespace icsrange::game
