#include "icsrange/ids/alarm.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <mutex>

namespace icsrange::ids {

namespace {

constexpr std::array<std::string_view, 6> kRuleNames = {
    "ARP_POISON", "SYN_FLOOD", "IP_MAC_CONFLICT", "TAG_DIVERGENCE", "INVARIANT", "SCAN_FAULT"};

double parse_time(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || p != text.data() + text.size() || text.empty()) {
    throw MalformedFilter("filter '" + key + "' is not a number: '" + text + "'");
  }
  return v;
}

}  // namespace

std::string_view to_string(AlarmRule r) { return kRuleNames[static_cast<std::size_t>(r)]; }

AlarmRule parse_alarm_rule(std::string_view s) {
  for (std::size_t i = 0; i < kRuleNames.size(); ++i) {
    if (kRuleNames[i] == s) return static_cast<AlarmRule>(i);
  }
  throw std::invalid_argument("unknown alarm rule '" + std::string(s) + "'");
}

Engine engine_of(AlarmRule r) {
  switch (r) {
    case AlarmRule::invariant:
      return Engine::process_invariant;
    case AlarmRule::scan_fault:
      return Engine::diagnostic;
    default:
      return Engine::network;
  }
}

bool is_detection(AlarmRule r) { return engine_of(r) != Engine::diagnostic; }

nlohmann::json to_json(const Alarm& a) {
  nlohmann::json j{{"id", a.id},
                   {"ts", a.ts},
                   {"source_node", a.source_node},
                   {"rule", to_string(a.rule)},
                   {"severity", a.severity},
                   {"evidence", a.evidence},
                   {"detail", a.detail}};
  j["session"] = a.session ? nlohmann::json(*a.session) : nlohmann::json(nullptr);
  return j;
}

Alarm alarm_from_json(const nlohmann::json& j) {
  Alarm a;
  a.id = j.at("id").get<std::uint64_t>();
  a.ts = j.at("ts").get<double>();
  a.source_node = j.at("source_node").get<std::string>();
  a.rule = parse_alarm_rule(j.at("rule").get<std::string>());
  a.severity = j.at("severity").get<std::string>();
  a.evidence = j.at("evidence").get<std::vector<std::string>>();
  a.detail = j.value("detail", std::string());
  if (j.contains("session") && !j.at("session").is_null()) {
    a.session = j.at("session").get<std::string>();
  }
  return a;
}

bool AlarmFilter::matches(const Alarm& a) const {
  if (from && a.ts < *from) return false;
  if (to && a.ts > *to) return false;
  if (rule && a.rule != *rule) return false;
  if (node && a.source_node != *node) return false;
  if (session && a.session != *session) return false;
  return true;
}

AlarmFilter AlarmFilter::parse(const std::map<std::string, std::string>& params) {
  AlarmFilter f;
  for (const auto& [key, value] : params) {
    if (key == "from") {
      f.from = parse_time(key, value);
    } else if (key == "to") {
      f.to = parse_time(key, value);
    } else if (key == "rule") {
      try {
        f.rule = parse_alarm_rule(value);
      } catch (const std::invalid_argument& e) {
        throw MalformedFilter(e.what());
      }
    } else if (key == "node") {
      f.node = value;
    } else if (key == "session") {
      f.session = value;
    } else {
      throw MalformedFilter("unknown filter key '" + key + "'");
    }
  }
  if (f.from && f.to && *f.from > *f.to) throw MalformedFilter("filter range is reversed");
  return f;
}

Alarm AlarmStore::append(Alarm alarm) {
  std::unique_lock lock(mutex_);
  alarm.id = next_id_++;
  if (session_ && !alarm.session) alarm.session = session_;
  alarms_.push_back(alarm);
  return alarm;
}

void AlarmStore::begin_session(std::string session) {
  std::unique_lock lock(mutex_);
  session_ = std::move(session);
}

void AlarmStore::end_session() {
  std::unique_lock lock(mutex_);
  session_.reset();
}

std::optional<std::string> AlarmStore::active_session() const {
  std::shared_lock lock(mutex_);
  return session_;
}

std::vector<Alarm> AlarmStore::query(const AlarmFilter& filter) const {
  std::vector<Alarm> out;
  {
    std::shared_lock lock(mutex_);
    for (const auto& a : alarms_) {
      if (filter.matches(a)) out.push_back(a);
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Alarm& a, const Alarm& b) { return a.ts < b.ts; });
  return out;
}

std::size_t AlarmStore::size() const {
  std::shared_lock lock(mutex_);
  return alarms_.size();
}

std::string AlarmStore::export_lines(const AlarmFilter& filter) const {
  std::string out;
  for (const auto& a : query(filter)) {
    out += to_json(a).dump();
    out += '\n';
  }
  return out;
}

}  // namespace icsrange::ids
