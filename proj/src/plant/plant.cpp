#include "icsrange/plant/plant.hpp"

#include <algorithm>
#include <cmath>

namespace icsrange::plant {

namespace {

constexpr double kTransitionEpsilon = 1e-9;

void require_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) {
    throw SimulationFault("non-finite value in " + what);
  }
}

template <typename T, typename Range>
T& find_by_id(Range& items, std::string_view id, const char* kind) {
  auto it = std::find_if(items.begin(), items.end(),
                         [&](const auto& item) { return item.id == id; });
  if (it == items.end()) {
    throw std::out_of_range(std::string(kind) + " '" + std::string(id) + "' not found");
  }
  return *it;
}

bool is_valve(const Actuator& a) { return a.kind == ActuatorKind::motorized_valve; }

void command_actuator(Actuator& a, std::string_view command, double delay) {
  if (is_valve(a)) {
    ActuatorState target;
    if (command == "OPEN") {
      target = ActuatorState::open;
    } else if (command == "CLOSE") {
      target = ActuatorState::closed;
    } else {
      throw InvalidCommand("valve " + a.id + " does not accept '" + std::string(command) + "'");
    }
    if (a.state == target) return;
    if (a.state == ActuatorState::transition && a.transition_target == target) return;
    a.state = ActuatorState::transition;
    a.transition_target = target;
    a.transition_remaining = delay;
    return;
  }
  if (command == "ON") {
    a.state = ActuatorState::on;
  } else if (command == "OFF") {
    a.state = ActuatorState::off;
  } else {
    throw InvalidCommand("pump " + a.id + " does not accept '" + std::string(command) + "'");
  }
}

bool command_unit(PlantState& s, std::string_view unit, std::string_view command) {
  bool* flag = nullptr;
  if (unit == kReverseOsmosisUnit) {
    flag = &s.ro_running;
  } else if (unit == kBackwashUnit) {
    flag = &s.backwash;
  } else {
    return false;
  }
  if (command == "START") {
    *flag = true;
  } else if (command == "STOP") {
    *flag = false;
  } else {
    throw InvalidCommand("unit " + std::string(unit) + " does not accept '" +
                         std::string(command) + "'");
  }
  return true;
}

}  // namespace

const Tank& PlantState::tank(std::string_view id) const {
  return find_by_id<const Tank>(tanks, id, "tank");
}
Tank& PlantState::tank(std::string_view id) { return find_by_id<Tank>(tanks, id, "tank"); }
const Actuator& PlantState::actuator(std::string_view id) const {
  return find_by_id<const Actuator>(actuators, id, "actuator");
}
Actuator& PlantState::actuator(std::string_view id) {
  return find_by_id<Actuator>(actuators, id, "actuator");
}
bool PlantState::has_actuator(std::string_view id) const {
  return std::any_of(actuators.begin(), actuators.end(),
                     [&](const Actuator& a) { return a.id == id; });
}

PlantState step_plant(PlantState s, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("step_plant: dt must be positive and finite");
  }

  std::map<std::string, TankFlows> flows;
  for (const auto& t : s.tanks) flows[t.id] = {};
  for (const auto& a : s.actuators) {
    if (!a.conducting() || a.kind == ActuatorKind::dosing_pump) continue;
    if (auto it = flows.find(a.to); it != flows.end()) it->second.in += a.rated_flow;
    if (auto it = flows.find(a.from); it != flows.end()) it->second.out += a.rated_flow;
  }

  for (auto& t : s.tanks) {
    require_finite(t.level, "tank " + t.id + " level");
    const TankFlows& q = flows[t.id];
    const double previous = t.level;
    double next = t.level + (q.in - q.out) * dt / t.area;
    require_finite(next, "tank " + t.id + " level");
    next = std::clamp(next, 0.0, t.level_max_physical);
    t.level = next;
    if (previous <= t.overflow_threshold && next > t.overflow_threshold) {
      s.overflow_events.push_back({t.id, s.time + dt, s.steps + 1});
    }
  }

  if (!s.dosing.pump.empty()) {
    const auto& pump = s.actuator(s.dosing.pump);
    const double upstream = flows[s.dosing.stream_tank].out;
    if (upstream > 0.0) {
      const double injected =
          pump.conducting() ? pump.rated_flow * s.dosing.stock_concentration : 0.0;
      s.dosing_concentration +=
          dt * (injected - s.dosing_concentration * upstream) / s.dosing.mixing_volume;
      require_finite(s.dosing_concentration, "dosing concentration");
      s.dosing_concentration = std::max(0.0, s.dosing_concentration);
    }
  }

  for (const auto& p : s.pressure_specs) {
    s.pressure[p.id] = s.actuator(p.pump).conducting() ? p.rated_kpa : 0.0;
  }

  for (auto& a : s.actuators) {
    if (a.state != ActuatorState::transition) continue;
    a.transition_remaining -= dt;
    if (a.transition_remaining <= kTransitionEpsilon) {
      a.state = a.transition_target;
      a.transition_remaining = 0.0;
    }
  }

  require_finite(s.hardness, "hardness");
  s.last_flows = std::move(flows);
  s.time += dt;
  s.steps += 1;
  return s;
}

double state_code(ActuatorState st) {
  switch (st) {
    case ActuatorState::closed:
    case ActuatorState::off:
      return 0.0;
    case ActuatorState::open:
    case ActuatorState::on:
      return 1.0;
    case ActuatorState::transition:
      return 2.0;
  }
  return 0.0;
}

double true_value(const PlantState& s, std::string_view sensor_id) {
  auto it = std::find_if(s.sensors.begin(), s.sensors.end(),
                         [&](const SensorSpec& spec) { return spec.id == sensor_id; });
  if (it == s.sensors.end()) {
    throw UnknownSensor("unknown sensor '" + std::string(sensor_id) + "'");
  }
  const SensorSpec& spec = *it;
  auto flow_of = [&](bool in) {
    auto f = s.last_flows.find(spec.target);
    if (f == s.last_flows.end()) return 0.0;
    return in ? f->second.in : f->second.out;
  };
  switch (spec.kind) {
    case SensorKind::level:
      return s.tank(spec.target).level;
    case SensorKind::inflow:
      return flow_of(true);
    case SensorKind::outflow:
      return flow_of(false);
    case SensorKind::dosing:
      return s.dosing_concentration;
    case SensorKind::hardness:
      return s.hardness;
    case SensorKind::pressure: {
      auto p = s.pressure.find(spec.target);
      return p == s.pressure.end() ? 0.0 : p->second;
    }
    case SensorKind::actuator:
      return state_code(s.actuator(spec.target).state);
    case SensorKind::process_unit:
      if (spec.target == kReverseOsmosisUnit) return s.ro_running ? 1.0 : 0.0;
      if (spec.target == kBackwashUnit) return s.backwash ? 1.0 : 0.0;
      throw UnknownSensor("unknown process unit '" + spec.target + "'");
  }
  return 0.0;
}

Measurement read_sensor(PlantState& s, std::string_view sensor_id) {
  const double truth = true_value(s, sensor_id);
  const auto& spec = *std::find_if(s.sensors.begin(), s.sensors.end(),
                                   [&](const SensorSpec& sp) { return sp.id == sensor_id; });
  double value = truth;
  if (spec.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    value += noise(s.rng);
  }
  std::string units;
  switch (spec.kind) {
    case SensorKind::level: units = "m"; break;
    case SensorKind::inflow:
    case SensorKind::outflow: units = "m3/s"; break;
    case SensorKind::dosing:
    case SensorKind::hardness: units = "mg/L"; break;
    case SensorKind::pressure: units = "kPa"; break;
    case SensorKind::actuator:
    case SensorKind::process_unit: units = "state"; break;
  }
  return {value, std::move(units)};
}

PlantState force_actuator(PlantState s, std::string_view actuator_id, std::string_view command,
                          ControlMode mode) {
  if (!s.has_actuator(actuator_id)) {
    throw InvalidCommand("unknown actuator '" + std::string(actuator_id) + "'");
  }
  Actuator& a = s.actuator(actuator_id);
  if (!command.empty()) command_actuator(a, command, s.valve_transition_delay);
  a.mode = mode;
  return s;
}

bool apply_plc_command(PlantState& s, std::string_view target, std::string_view command) {
  if (command_unit(s, target, command)) return true;
  if (!s.has_actuator(target)) {
    throw InvalidCommand("unknown actuator '" + std::string(target) + "'");
  }
  Actuator& a = s.actuator(target);
  if (a.mode == ControlMode::manual) return false;
  command_actuator(a, command, s.valve_transition_delay);
  return true;
}

void Plant::step(double dt) {
  while (!inbox_.empty()) {
    PlantCommand cmd = std::move(inbox_.front());
    inbox_.pop_front();
    try {
      switch (cmd.type) {
        case PlantCommand::Type::plc:
          apply_plc_command(state_, cmd.target, cmd.command);
          break;
        case PlantCommand::Type::force:
          state_ = force_actuator(state_, cmd.target, cmd.command, cmd.mode);
          break;
        case PlantCommand::Type::set_mode:
          state_ = force_actuator(state_, cmd.target, "", cmd.mode);
          break;
        case PlantCommand::Type::set_hardness:
          state_.hardness = cmd.value;
          break;
      }
    } catch (const InvalidCommand& e) {
      rejected_.push_back(e.what());
    }
  }
  state_ = step_plant(std::move(state_), dt);
}

std::string_view to_string(ActuatorState st) {
  switch (st) {
    case ActuatorState::closed: return "CLOSED";
    case ActuatorState::open: return "OPEN";
    case ActuatorState::transition: return "TRANSITION";
    case ActuatorState::off: return "OFF";
    case ActuatorState::on: return "ON";
  }
  return "?";
}

std::string_view to_string(ActuatorKind k) {
  switch (k) {
    case ActuatorKind::motorized_valve: return "motorized_valve";
    case ActuatorKind::pump: return "pump";
    case ActuatorKind::dosing_pump: return "dosing_pump";
  }
  return "?";
}

std::string_view to_string(ControlMode m) {
  return m == ControlMode::manual ? "MANUAL" : "AUTO";
}

std::string_view to_string(SensorKind k) {
  switch (k) {
    case SensorKind::level: return "level";
    case SensorKind::inflow: return "inflow";
    case SensorKind::outflow: return "outflow";
    case SensorKind::dosing: return "dosing";
    case SensorKind::hardness: return "hardness";
    case SensorKind::pressure: return "pressure";
    case SensorKind::actuator: return "actuator";
    case SensorKind::process_unit: return "process_unit";
  }
  return "?";
}

ActuatorKind parse_actuator_kind(std::string_view s) {
  if (s == "motorized_valve") return ActuatorKind::motorized_valve;
  if (s == "pump") return ActuatorKind::pump;
  if (s == "dosing_pump") return ActuatorKind::dosing_pump;
  throw std::invalid_argument("unknown actuator kind '" + std::string(s) + "'");
}

ActuatorState parse_actuator_state(std::string_view s) {
  if (s == "CLOSED") return ActuatorState::closed;
  if (s == "OPEN") return ActuatorState::open;
  if (s == "TRANSITION") return ActuatorState::transition;
  if (s == "OFF") return ActuatorState::off;
  if (s == "ON") return ActuatorState::on;
  throw std::invalid_argument("unknown actuator state '" + std::string(s) + "'");
}

ControlMode parse_control_mode(std::string_view s) {
  if (s == "AUTO" || s == "0") return ControlMode::automatic;
  if (s == "MANUAL" || s == "1") return ControlMode::manual;
  throw std::invalid_argument("unknown control mode '" + std::string(s) + "'");
}

SensorKind parse_sensor_kind(std::string_view s) {
  for (auto k : {SensorKind::level, SensorKind::inflow, SensorKind::outflow, SensorKind::dosing,
                 SensorKind::hardness, SensorKind::pressure, SensorKind::actuator,
                 SensorKind::process_unit}) {
    if (to_string(k) == s) return k;
  }
  throw std::invalid_argument("unknown sensor kind '" + std::string(s) + "'");
}

}  // namespace icsrange::plant
