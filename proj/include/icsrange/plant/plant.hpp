#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace icsrange::plant {

class SimulationFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownSensor : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidCommand : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Tank {
  std::string id;
  double level = 0.0;               // m
  double area = 1.5;                // m^2
  double level_max_physical = 1.1;  // m
  double overflow_threshold = 1.0;  // m
  double setpoint_low = 0.25;
  double setpoint_high = 0.80;

  bool operator==(const Tank&) const = default;
};

enum class ActuatorKind { motorized_valve, pump, dosing_pump };
enum class ActuatorState { closed, open, transition, off, on };
enum class ControlMode { automatic, manual };

/// A valve, pump or dosing pump. `from`/`to` name a tank id, "source",
/// "sink" or "stream" (dosing pumps inject into the stream leaving
/// `DosingLine::stream_tank`).
struct Actuator {
  std::string id;
  ActuatorKind kind = ActuatorKind::pump;
  ActuatorState state = ActuatorState::off;
  double rated_flow = 0.003;  // m^3/s
  ControlMode mode = ControlMode::automatic;
  std::string from;
  std::string to;
  // Valve travel bookkeeping, meaningful only while state == transition.
  ActuatorState transition_target = ActuatorState::closed;
  double transition_remaining = 0.0;

  bool conducting() const {
    return state == ActuatorState::open || state == ActuatorState::on;
  }
  bool operator==(const Actuator&) const = default;
};

struct DosingLine {
  std::string pump;          // dosing pump actuator id
  std::string stream_tank;   // tank whose outflow carries the chemical
  double stock_concentration = 2000.0;  // mg/L in the dosing tank
  double mixing_volume = 0.05;          // m^3

  bool operator==(const DosingLine&) const = default;
};

enum class SensorKind {
  level,        // tank level, m
  inflow,       // total tank inflow during the last step, m^3/s
  outflow,      // total tank outflow during the last step, m^3/s
  dosing,       // dosing concentration, mg/L
  hardness,     // analyzer value, mg/L
  pressure,     // kPa
  actuator,     // state code
  process_unit  // 1 running / 0 stopped
};

struct SensorSpec {
  std::string id;
  SensorKind kind = SensorKind::level;
  std::string target;  // tank, actuator, pump or unit id
  double noise_sigma = 0.0;

  bool operator==(const SensorSpec&) const = default;
};

struct PressureSpec {
  std::string id;
  std::string pump;
  double rated_kpa = 150.0;

  bool operator==(const PressureSpec&) const = default;
};

struct OverflowEvent {
  std::string tank;
  double time = 0.0;
  std::uint64_t step = 0;  // step index (1-based) on which the crossing happened

  bool operator==(const OverflowEvent&) const = default;
};

struct TankFlows {
  double in = 0.0;
  double out = 0.0;
  bool operator==(const TankFlows&) const = default;
};

/// Complete process state. Copyable; the noise generator travels with it so
/// identical states and command logs give identical trajectories.
struct PlantState {
  double time = 0.0;
  std::uint64_t steps = 0;
  std::vector<Tank> tanks;
  std::vector<Actuator> actuators;
  std::map<std::string, double> pressure;  // kPa per monitored pipe
  double dosing_concentration = 0.0;       // mg/L
  double hardness = 0.0;
  bool ro_running = true;
  bool backwash = false;

  double valve_transition_delay = 2.0;
  DosingLine dosing;
  std::vector<SensorSpec> sensors;
  std::vector<PressureSpec> pressure_specs;
  std::map<std::string, TankFlows> last_flows;
  std::vector<OverflowEvent> overflow_events;
  std::mt19937_64 rng{1};

  const Tank& tank(std::string_view id) const;
  Tank& tank(std::string_view id);
  const Actuator& actuator(std::string_view id) const;
  Actuator& actuator(std::string_view id);
  bool has_actuator(std::string_view id) const;

  bool operator==(const PlantState&) const = default;
};

/// Names of the process units that accept START/STOP instead of an actuator.
inline constexpr std::string_view kReverseOsmosisUnit = "RO";
inline constexpr std::string_view kBackwashUnit = "UF_BACKWASH";

struct Measurement {
  double value = 0.0;
  std::string units;
};

/// Advances the process by `dt` seconds using on/off rated flows.
PlantState step_plant(PlantState state, double dt);

/// Ground truth plus the sensor's configured zero-mean noise. Only the
/// generator inside `state` advances.
Measurement read_sensor(PlantState& state, std::string_view sensor_id);

/// Ground truth, never noisy.
double true_value(const PlantState& state, std::string_view sensor_id);

/// Direct override (HMI/engineering path). MANUAL pins the command until the
/// mode is set back to AUTO.
PlantState force_actuator(PlantState state, std::string_view actuator_id,
                          std::string_view command, ControlMode mode);

/// PLC path: ignored for actuators in MANUAL. Returns whether it was applied.
bool apply_plc_command(PlantState& state, std::string_view target,
                       std::string_view command);

/// Numeric code published for an actuator state.
double state_code(ActuatorState s);
std::string_view to_string(ActuatorState s);
std::string_view to_string(ActuatorKind k);
std::string_view to_string(ControlMode m);
std::string_view to_string(SensorKind k);
ActuatorKind parse_actuator_kind(std::string_view s);
ActuatorState parse_actuator_state(std::string_view s);
ControlMode parse_control_mode(std::string_view s);
SensorKind parse_sensor_kind(std::string_view s);

/// Queued commands applied at step boundaries.
struct PlantCommand {
  enum class Type { plc, force, set_hardness, set_mode } type = Type::plc;
  std::string target;
  std::string command;
  ControlMode mode = ControlMode::automatic;
  double value = 0.0;
};

/// Single-owner stepped plant with an ordered command inbox.
class Plant {
 public:
  explicit Plant(PlantState initial) : state_(std::move(initial)) {}

  void enqueue(PlantCommand cmd) { inbox_.push_back(std::move(cmd)); }
  /// Applies queued commands in order, then advances the process.
  void step(double dt);

  const PlantState& state() const { return state_; }
  PlantState& mutable_state() { return state_; }
  Measurement read(std::string_view sensor_id) { return read_sensor(state_, sensor_id); }
  /// Queued commands that were invalid for their target, in arrival order.
  const std::vector<std::string>& rejected() const { return rejected_; }

 private:
  PlantState state_;
  std::deque<PlantCommand> inbox_;
  std::vector<std::string> rejected_;
};

}  // namespace icsrange::plant
