#include "icsrange/attack/scenario.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace icsrange::attack {

namespace {

struct ActionSpec {
  std::size_t min_args;
  std::size_t max_args;
  std::optional<score::Capability> capability;
};

const std::map<std::string, ActionSpec, std::less<>>& actions() {
  using C = score::Capability;
  static const std::map<std::string, ActionSpec, std::less<>> table = {
      {"wait", {1, 1, std::nullopt}},
      {"wait_until", {2, 99, std::nullopt}},
      {"assert", {1, 99, std::nullopt}},
      {"assert_hold", {2, 99, std::nullopt}},
      {"set_hardness", {1, 1, std::nullopt}},
      {"arp_poison", {2, 2, C::network_tools}},
      {"arp_restore", {0, 2, C::network_tools}},
      {"mitm_drop", {2, 2, C::network_tools}},
      {"mitm_modify", {5, 5, C::network_tools}},
      {"mitm_clear", {0, 0, C::network_tools}},
      {"passive_mitm", {3, 3, C::network_tools}},
      {"syn_flood", {3, 3, C::network_tools}},
      {"tag_read", {2, 2, C::network_tools}},
      {"tag_write", {3, 3, C::network_tools}},
      {"hmi_override", {3, 3, C::admin_accounts}},
  };
  return table;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t to) {
  std::string out;
  for (std::size_t i = from; i < to; ++i) {
    if (i > from) out += ' ';
    out += words[i];
  }
  return out;
}

bool is_number(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

void check_step(const Step& step, std::size_t line) {
  auto spec = actions().find(step.action);
  if (spec == actions().end()) throw ScenarioError(line, "unknown action '" + step.action + "'");
  if (step.args.size() < spec->second.min_args || step.args.size() > spec->second.max_args) {
    throw ScenarioError(line, "wrong number of arguments for '" + step.action + "'");
  }
  double num = 0.0;
  auto numeric = [&](std::size_t i) {
    if (!is_number(step.args[i], num)) {
      throw ScenarioError(line, "'" + step.action + "' expects a number, got '" + step.args[i] + "'");
    }
  };
  try {
    if (step.action == "wait" || step.action == "set_hardness") numeric(0);
    if (step.action == "syn_flood") {
      numeric(1);
      numeric(2);
    }
    if (step.action == "passive_mitm") numeric(2);
    if (step.action == "wait_until" || step.action == "assert_hold") {
      numeric(step.args.size() - 1);
      parse_predicate(join(step.args, 0, step.args.size() - 1));
    }
    if (step.action == "assert") parse_predicate(join(step.args, 0, step.args.size()));
    if (step.action == "mitm_modify") {
      const auto& how = step.args[3];
      if (how != "set" && how != "offset" && how != "scale" && how != "xor") {
        throw ScenarioError(line, "unknown transform '" + how + "'");
      }
      if (how != "set") numeric(4);
    }
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(line, e.what());
  }
}

}  // namespace

ScenarioError::ScenarioError(std::size_t line, const std::string& message)
    : std::runtime_error("scenario line " + std::to_string(line) + ": " + message), line_(line) {}

Predicate parse_predicate(std::string_view text) {
  auto words = split_words(text);
  Predicate p;
  p.source = join(words, 0, words.size());
  if (words.empty()) throw std::invalid_argument("empty predicate");
  if (words.size() >= 3 && words[1] == "contains") {
    if (words[0] != "transcript" && words[0] != "readout") {
      throw std::invalid_argument("'contains' applies to transcript or readout");
    }
    p.kind = Predicate::Kind::contains;
    p.subject = words[0];
    p.text = join(words, 2, words.size());
    return p;
  }
  p.subject = words[0];
  if (words.size() == 1) return p;
  static const std::set<std::string> ops = {"==", "!=", "<", "<=", ">", ">="};
  if (words.size() != 3 || !ops.contains(words[1]) || !is_number(words[2], p.value)) {
    throw std::invalid_argument("malformed predicate '" + p.source + "'");
  }
  p.kind = Predicate::Kind::compare;
  p.op = words[1];
  return p;
}

std::optional<score::Capability> capability_of(const Step& step) {
  auto it = actions().find(step.action);
  if (it == actions().end()) return std::nullopt;
  auto cap = it->second.capability;
  // Inline manipulation on a field segment needs hands on the cabinet.
  if (step.action == "mitm_modify" && !step.args.empty() && step.args[0].rfind("RIO", 0) == 0) {
    return score::Capability::physical_access;
  }
  return cap;
}

Scenario parse_scenario(std::string_view source) {
  Scenario s;
  std::istringstream in{std::string(source)};
  std::string raw;
  std::size_t line = 0;
  std::vector<std::pair<Step, bool>> all;  // (step, is_undo)
  while (std::getline(in, raw)) {
    ++line;
    auto words = split_words(raw);
    if (words.empty() || words[0].front() == '#') continue;
    const std::string& key = words[0];
    if (key == "scenario") {
      if (words.size() != 2) throw ScenarioError(line, "scenario takes one id");
      if (!s.id.empty()) throw ScenarioError(line, "duplicate scenario line");
      s.id = words[1];
    } else if (key == "description") {
      s.description = join(words, 1, words.size());
    } else if (key == "requires") {
      for (std::size_t i = 1; i < words.size(); ++i) {
        try {
          s.capabilities.insert(score::parse_capability(words[i]));
        } catch (const std::invalid_argument& e) {
          throw ScenarioError(line, e.what());
        }
      }
    } else if (key == "step" || key == "undo") {
      if (words.size() < 2) throw ScenarioError(line, key + " needs an action");
      Step st{words[1], {words.begin() + 2, words.end()}, line};
      check_step(st, line);
      (key == "step" ? s.steps : s.undo).push_back(st);
      all.emplace_back(st, key == "undo");
    } else if (key == "success") {
      try {
        s.success = parse_predicate(join(words, 1, words.size()));
      } catch (const std::invalid_argument& e) {
        throw ScenarioError(line, e.what());
      }
    } else {
      throw ScenarioError(line, "unknown keyword '" + key + "'");
    }
  }
  if (s.id.empty()) throw ScenarioError(line, "missing scenario id");
  for (const auto& [st, undo] : all) {
    auto cap = capability_of(st);
    if (cap && !s.capabilities.contains(*cap)) {
      throw ScenarioError(st.line, "action '" + st.action + "' needs undeclared capability " +
                                       std::string(score::to_string(*cap)));
    }
  }
  return s;
}

Scenario load_scenario(std::string_view id_or_path) {
  const auto& builtin = builtin_scenarios();
  if (auto it = builtin.find(std::string(id_or_path)); it != builtin.end()) {
    return parse_scenario(it->second);
  }
  std::ifstream in{std::string(id_or_path)};
  if (!in) throw std::runtime_error("no such scenario: " + std::string(id_or_path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

}  // namespace icsrange::attack
