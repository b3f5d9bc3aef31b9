#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "icsrange/game/game.hpp"
#include "icsrange/testbed/testbed.hpp"

namespace icsrange::game {

/// A range ticking on a background thread, `speed` simulated seconds per
/// wall-clock second. Access to the testbed goes through `with`.
class RangeHost {
 public:
  explicit RangeHost(testbed::TestbedConfig config = testbed::default_config(),
                     double speed = 1.0);
  ~RangeHost();
  RangeHost(const RangeHost&) = delete;
  RangeHost& operator=(const RangeHost&) = delete;

  void start();
  void stop();

  template <class F>
  auto with(F&& fn) {
    std::lock_guard lock(mutex_);
    return fn(*testbed_);
  }
  double time();

 private:
  std::unique_ptr<testbed::Testbed> testbed_;
  double speed_;
  std::mutex mutex_;
  std::thread thread_;
  std::atomic<bool> running_{false};
};

/// JSON API over a game and, optionally, a live range.
///   POST /api/flags                          team
///   GET  /api/submissions                    team (own only) or judge
///   GET  /api/scoreboard?from=&to=           public
///   GET  /api/challenges                     public, no secrets
///   GET  /api/challenges/{id}/hints/{n}      team, logged
///   POST /api/sessions                       judge
///   POST /api/sessions/{id}/declarations     owning team or judge
///   POST /api/declarations/{id}/adjudicate   judge
///   GET  /api/alarms?from=&to=&rule=&node=&session=
///   GET  /api/hmi/state
///   POST /api/hmi/override                   team with an admin or engineering profile
/// Tokens travel as `Authorization: Bearer <token>`.
class ApiServer {
 public:
  using Clock = std::function<double()>;

  ApiServer(Game& game, RangeHost* range = nullptr, Clock clock = {});
  void mount(httplib::Server& server);

 private:
  double now() const;
  double live_now() const;

  Game& game_;
  RangeHost* range_;
  Clock clock_;
  ids::AlarmStore empty_alarms_;
};

}  // namespace icsrange::game
