#include "icsrange/plc/plc.hpp"

#include <cmath>
#include <stdexcept>

namespace icsrange::plc {

namespace {

std::optional<double> command_code(std::string_view word) {
  if (word == "OPEN" || word == "ON" || word == "START") return 1.0;
  if (word == "CLOSE" || word == "OFF" || word == "STOP") return 0.0;
  return std::nullopt;
}

constexpr double kTransitionCode = 2.0;

ControlMode mode_from_value(const TagValue& v) {
  if (const auto* s = std::get_if<std::string>(&v)) {
    return *s == "MANUAL" ? ControlMode::manual : ControlMode::automatic;
  }
  auto n = as_number(v);
  return n && *n == 1.0 ? ControlMode::manual : ControlMode::automatic;
}

}  // namespace

std::string mode_tag(std::string_view actuator) { return std::string(actuator) + ":MODE"; }
std::string manual_command_tag(std::string_view actuator) {
  return std::string(actuator) + ":CMD";
}

std::optional<std::size_t> residual_check(std::span<const double> measured,
                                          std::span<const double> predicted, double epsilon,
                                          std::size_t window) {
  if (measured.size() != predicted.size()) {
    throw std::invalid_argument("residual_check: history lengths differ");
  }
  if (window == 0 || measured.size() < window) {
    throw std::invalid_argument("residual_check: history shorter than window");
  }
  std::size_t run = 0;
  for (std::size_t i = 0; i < measured.size(); ++i) {
    run = std::fabs(measured[i] - predicted[i]) > epsilon ? run + 1 : 0;
    if (run >= window) return i;
  }
  return std::nullopt;
}

Plc::Plc(PlcConfig config)
    : config_(std::move(config)),
      program_(parse_program(config_.program)),
      invariants_(parse_invariants(config_.invariants)),
      tags_(config_.id) {
  for (const auto& t : config_.tags) tags_.declare(t.name, t.initial, t.writable);
  for (const auto& a : config_.actuators) {
    if (!tags_.contains(mode_tag(a))) tags_.declare(mode_tag(a), std::string("AUTO"), true);
    if (!tags_.contains(manual_command_tag(a))) {
      tags_.declare(manual_command_tag(a), std::string(), true);
    }
  }
  rule_state_.resize(invariants_.size());
  rung_faulted_.resize(program_.rungs.size(), false);
}

Snapshot Plc::snapshot(double time) const {
  Snapshot s;
  s.time = time;
  for (const auto& [name, rec] : tags_.records()) {
    if (auto n = as_number(rec.value)) s.values.emplace(name, *n);
  }
  for (const auto& a : config_.actuators) {
    s.modes[a] = mode_from_value(tags_.record(mode_tag(a)).value);
  }
  return s;
}

std::optional<double> Plc::lookup(std::string_view name, const Snapshot& snap,
                                  const std::map<std::string, double, std::less<>>& written) const {
  if (auto it = program_.setpoints.find(name); it != program_.setpoints.end()) return it->second;
  if (auto it = written.find(name); it != written.end()) return it->second;
  if (auto it = snap.values.find(name); it != snap.values.end()) return it->second;
  return std::nullopt;
}

void Plc::reset_history(const Expr& e) {
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, Call>) {
          if (auto it = history_.find(&e); it != history_.end()) it->second.predicted.reset();
          for (const auto& a : n.args) reset_history(*a);
        } else if constexpr (std::is_same_v<N, Unary>) {
          reset_history(*n.operand);
        } else if constexpr (std::is_same_v<N, Binary>) {
          reset_history(*n.lhs);
          reset_history(*n.rhs);
        }
      },
      e.node);
}

ScanResult Plc::scan(const Snapshot& snap) {
  ScanResult result;
  std::map<std::string, double, std::less<>> written;
  std::map<std::string, std::string, std::less<>> desired;

  auto make_ctx = [&] {
    return EvalContext([&](std::string_view n) { return lookup(n, snap, written); },
                       config_.scan_period, &history_);
  };

  for (std::size_t i = 0; i < program_.rungs.size(); ++i) {
    const Rung& rung = program_.rungs[i];
    EvalContext ctx = make_ctx();
    try {
      if (evaluate(*rung.condition, ctx) == 0.0) {
        rung_faulted_[i] = false;
        continue;
      }
      // Evaluate every action before committing any of them.
      std::vector<std::pair<std::string, double>> sets;
      for (const auto& action : rung.actions) {
        if (const auto* s = std::get_if<SetAction>(&action)) {
          if (!tags_.contains(s->tag)) throw UndefinedReference(s->tag);
          sets.emplace_back(s->tag, evaluate(*s->value, ctx));
        }
      }
      for (auto& [tag, value] : sets) {
        written[tag] = value;
        tags_.set(tag, value, snap.time);
        result.tag_updates.emplace_back(tag, value);
      }
      for (const auto& action : rung.actions) {
        if (const auto* c = std::get_if<CmdAction>(&action)) desired[c->target] = c->command;
      }
      rung_faulted_[i] = false;
    } catch (const UndefinedReference& e) {
      if (!rung_faulted_[i]) {
        result.alarms.push_back({PlcAlarm::Kind::scan_fault, "RUNG" + std::to_string(i + 1),
                                 snap.time, e.what()});
      }
      rung_faulted_[i] = true;
    }
  }

  for (const auto& actuator : config_.actuators) {
    auto mode_it = snap.modes.find(actuator);
    const ControlMode mode = mode_it == snap.modes.end() ? ControlMode::automatic : mode_it->second;
    auto prev_it = last_mode_.find(actuator);
    const ControlMode prev = prev_it == last_mode_.end() ? ControlMode::automatic : prev_it->second;

    if (mode == ControlMode::manual) {
      std::string word;
      if (const auto* s = std::get_if<std::string>(&tags_.record(manual_command_tag(actuator)).value)) {
        word = *s;
      }
      auto last = last_manual_command_.find(actuator);
      if (prev != ControlMode::manual || last == last_manual_command_.end() || last->second != word) {
        result.commands.push_back({actuator, word, ControlMode::manual});
        last_manual_command_[actuator] = word;
      }
      last_auto_command_.erase(actuator);
    } else {
      if (prev == ControlMode::manual) {
        result.commands.push_back({actuator, "", ControlMode::automatic});
        last_manual_command_.erase(actuator);
      }
      if (auto d = desired.find(actuator); d != desired.end()) {
        const std::string& word = d->second;
        auto observed = snap.values.find(actuator);
        auto target = command_code(word);
        bool mismatch = observed != snap.values.end() && target &&
                        observed->second != *target && observed->second != kTransitionCode;
        auto last = last_auto_command_.find(actuator);
        if (last == last_auto_command_.end() || last->second != word || mismatch) {
          result.commands.push_back({actuator, word, ControlMode::automatic});
          last_auto_command_[actuator] = word;
        }
      }
    }
    last_mode_[actuator] = mode;
  }

  for (std::size_t i = 0; i < invariants_.size(); ++i) {
    const InvariantRule& rule = invariants_[i];
    RuleState& st = rule_state_[i];
    EvalContext ctx = make_ctx();
    bool violated = false;
    try {
      const bool guard_ok = !rule.guard || evaluate(*rule.guard, ctx) != 0.0;
      const bool holds = relation_holds(rule, ctx);
      violated = guard_ok && !holds;
    } catch (const UndefinedReference& e) {
      if (!st.latched) {
        result.alarms.push_back({PlcAlarm::Kind::scan_fault, rule.id, snap.time, e.what()});
        st.latched = true;
      }
      continue;
    }
    if (!violated) {
      st.consecutive = 0;
      st.latched = false;
      continue;
    }
    ++st.consecutive;
    if (st.consecutive >= rule.window && !st.latched) {
      result.alarms.push_back({PlcAlarm::Kind::invariant, rule.id, snap.time,
                               "invariant " + rule.id + " violated for " +
                                   std::to_string(st.consecutive) + " scans"});
      st.latched = true;
      reset_history(*rule.relation);
    }
  }
  return result;
}

}  // namespace icsrange::plc
