#include "icsrange/plant/plant_config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace icsrange::plant {

using nlohmann::json;

namespace {

Actuator make_actuator(std::string id, ActuatorKind kind, ActuatorState state, double flow,
                       std::string from, std::string to) {
  Actuator a;
  a.id = std::move(id);
  a.kind = kind;
  a.state = state;
  a.rated_flow = flow;
  a.from = std::move(from);
  a.to = std::move(to);
  return a;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw std::invalid_argument(std::string(where) + ": unknown key '" + key + "'");
  }
}

void validate(const PlantState& s) {
  for (const auto& t : s.tanks) {
    if (!(t.overflow_threshold > t.setpoint_high && t.setpoint_high > t.setpoint_low &&
          t.setpoint_low > 0.0)) {
      throw std::invalid_argument("tank " + t.id + ": setpoints must satisfy overflow > high > low > 0");
    }
    if (!(t.area > 0.0) || !(t.level_max_physical >= t.overflow_threshold)) {
      throw std::invalid_argument("tank " + t.id + ": bad geometry");
    }
    if (t.level < 0.0 || t.level > t.level_max_physical) {
      throw std::invalid_argument("tank " + t.id + ": initial level out of range");
    }
  }
  for (const auto& a : s.actuators) {
    if (!(a.rated_flow > 0.0)) {
      throw std::invalid_argument("actuator " + a.id + ": rated_flow must be positive");
    }
    const bool valve = a.kind == ActuatorKind::motorized_valve;
    const bool valve_state = a.state == ActuatorState::open || a.state == ActuatorState::closed;
    const bool pump_state = a.state == ActuatorState::on || a.state == ActuatorState::off;
    if (valve ? !valve_state : !pump_state) {
      throw std::invalid_argument("actuator " + a.id + ": initial state invalid for its kind");
    }
  }
}

}  // namespace

PlantState default_plant() {
  PlantState s;
  s.tanks = {
      Tank{"T101", 0.50, 1.5, 1.10, 1.00, 0.25, 0.80},
      Tank{"T301", 0.50, 1.5, 1.10, 1.00, 0.25, 0.80},
  };
  s.actuators = {
      make_actuator("MV101", ActuatorKind::motorized_valve, ActuatorState::open, 0.004, "source",
                    "T101"),
      make_actuator("P101", ActuatorKind::pump, ActuatorState::on, 0.003, "T101", "T301"),
      make_actuator("P102", ActuatorKind::pump, ActuatorState::off, 0.003, "T101", "T301"),
      make_actuator("P201", ActuatorKind::dosing_pump, ActuatorState::off, 1e-5, "dosing_tank",
                    "stream"),
      make_actuator("P301", ActuatorKind::pump, ActuatorState::on, 0.002, "T301", "sink"),
  };
  s.dosing = DosingLine{"P201", "T101", 2000.0, 0.05};
  s.dosing_concentration = 2.5;
  s.hardness = 120.0;
  s.ro_running = true;
  s.backwash = false;
  s.valve_transition_delay = 2.0;
  s.pressure_specs = {PressureSpec{"PIT301", "P301", 150.0}};
  s.sensors = {
      {"LIT101", SensorKind::level, "T101", 0.0},
      {"FIT101", SensorKind::inflow, "T101", 0.0},
      {"FIT201", SensorKind::outflow, "T101", 0.0},
      {"AIT201", SensorKind::dosing, "", 0.0},
      {"LIT301", SensorKind::level, "T301", 0.0},
      {"FIT301", SensorKind::outflow, "T301", 0.0},
      {"PIT301", SensorKind::pressure, "PIT301", 0.0},
      {"AIT401", SensorKind::hardness, "", 0.0},
      {"MV101", SensorKind::actuator, "MV101", 0.0},
      {"P101", SensorKind::actuator, "P101", 0.0},
      {"P102", SensorKind::actuator, "P102", 0.0},
      {"P201", SensorKind::actuator, "P201", 0.0},
      {"P301", SensorKind::actuator, "P301", 0.0},
      {"RO", SensorKind::process_unit, "RO", 0.0},
      {"UF_BACKWASH", SensorKind::process_unit, "UF_BACKWASH", 0.0},
  };
  s.pressure["PIT301"] = 150.0;
  s.last_flows["T101"] = {0.004, 0.003};
  s.last_flows["T301"] = {0.003, 0.002};
  s.rng.seed(1);
  return s;
}

PlantState parse_plant_config(const std::string& text) {
  const json j = json::parse(text);
  check_keys(j, {"seed", "valve_transition_delay", "tanks", "actuators", "dosing", "hardness",
                 "ro_running", "pressure", "sensors"},
             "plant");
  PlantState s;
  s.rng.seed(j.value("seed", std::uint64_t{1}));
  s.valve_transition_delay = j.value("valve_transition_delay", 2.0);
  for (const auto& t : j.at("tanks")) {
    check_keys(t, {"id", "level", "area", "level_max_physical", "overflow_threshold",
                   "setpoint_low", "setpoint_high"},
               "tank");
    s.tanks.push_back(Tank{t.at("id"), t.at("level"), t.at("area"), t.at("level_max_physical"),
                           t.at("overflow_threshold"), t.at("setpoint_low"),
                           t.at("setpoint_high")});
  }
  for (const auto& a : j.at("actuators")) {
    check_keys(a, {"id", "kind", "state", "rated_flow", "from", "to", "mode"}, "actuator");
    Actuator act = make_actuator(a.at("id"), parse_actuator_kind(a.at("kind").get<std::string>()),
                                 parse_actuator_state(a.at("state").get<std::string>()),
                                 a.at("rated_flow"), a.at("from"), a.at("to"));
    act.mode = parse_control_mode(a.value("mode", std::string("AUTO")));
    s.actuators.push_back(std::move(act));
  }
  if (j.contains("dosing")) {
    const auto& d = j.at("dosing");
    check_keys(d, {"pump", "stream_tank", "stock_concentration", "mixing_volume", "initial"},
               "dosing");
    s.dosing = DosingLine{d.at("pump"), d.at("stream_tank"), d.at("stock_concentration"),
                          d.at("mixing_volume")};
    s.dosing_concentration = d.value("initial", 0.0);
  }
  s.hardness = j.value("hardness", 0.0);
  s.ro_running = j.value("ro_running", true);
  for (const auto& p : j.value("pressure", json::array())) {
    s.pressure_specs.push_back(PressureSpec{p.at("id"), p.at("pump"), p.at("rated_kpa")});
  }
  for (const auto& sn : j.at("sensors")) {
    check_keys(sn, {"id", "kind", "target", "noise_sigma"}, "sensor");
    s.sensors.push_back(SensorSpec{sn.at("id"),
                                   parse_sensor_kind(sn.at("kind").get<std::string>()),
                                   sn.value("target", std::string()),
                                   sn.value("noise_sigma", 0.0)});
  }
  validate(s);
  for (const auto& p : s.pressure_specs) {
    s.pressure[p.id] = s.actuator(p.pump).conducting() ? p.rated_kpa : 0.0;
  }
  for (const auto& t : s.tanks) {
    TankFlows f;
    for (const auto& a : s.actuators) {
      if (!a.conducting() || a.kind == ActuatorKind::dosing_pump) continue;
      if (a.to == t.id) f.in += a.rated_flow;
      if (a.from == t.id) f.out += a.rated_flow;
    }
    s.last_flows[t.id] = f;
  }
  return s;
}

PlantState load_plant_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plant config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_plant_config(buf.str());
}

std::string dump_plant_config(const PlantState& s) {
  json j;
  j["seed"] = 1;
  j["valve_transition_delay"] = s.valve_transition_delay;
  for (const auto& t : s.tanks) {
    j["tanks"].push_back({{"id", t.id},
                          {"level", t.level},
                          {"area", t.area},
                          {"level_max_physical", t.level_max_physical},
                          {"overflow_threshold", t.overflow_threshold},
                          {"setpoint_low", t.setpoint_low},
                          {"setpoint_high", t.setpoint_high}});
  }
  for (const auto& a : s.actuators) {
    ActuatorState st = a.state == ActuatorState::transition ? a.transition_target : a.state;
    j["actuators"].push_back({{"id", a.id},
                              {"kind", to_string(a.kind)},
                              {"state", to_string(st)},
                              {"rated_flow", a.rated_flow},
                              {"from", a.from},
                              {"to", a.to},
                              {"mode", to_string(a.mode)}});
  }
  if (!s.dosing.pump.empty()) {
    j["dosing"] = {{"pump", s.dosing.pump},
                   {"stream_tank", s.dosing.stream_tank},
                   {"stock_concentration", s.dosing.stock_concentration},
                   {"mixing_volume", s.dosing.mixing_volume},
                   {"initial", s.dosing_concentration}};
  }
  j["hardness"] = s.hardness;
  j["ro_running"] = s.ro_running;
  for (const auto& p : s.pressure_specs) {
    j["pressure"].push_back({{"id", p.id}, {"pump", p.pump}, {"rated_kpa", p.rated_kpa}});
  }
  for (const auto& sn : s.sensors) {
    j["sensors"].push_back({{"id", sn.id},
                            {"kind", to_string(sn.kind)},
                            {"target", sn.target},
                            {"noise_sigma", sn.noise_sigma}});
  }
  return j.dump(2);
}

std::string snapshot_record(const PlantState& s) {
  json j;
  j["t"] = s.time;
  for (const auto& sn : s.sensors) j[sn.id] = true_value(s, sn.id);
  return j.dump();
}

}  // namespace icsrange::plant
