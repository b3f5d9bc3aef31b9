#include "icsrange/game/challenge.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

namespace icsrange::game {

std::string_view to_string(Category c) {
  switch (c) {
    case Category::minicps: return "MINICPS";
    case Category::trivia: return "TRIVIA";
    case Category::forensics: return "FORENSICS";
    case Category::plc: return "PLC";
    case Category::misc: return "MISC";
  }
  return "?";
}

Category parse_category(std::string_view s) {
  for (auto c : {Category::minicps, Category::trivia, Category::forensics, Category::plc,
                 Category::misc}) {
    if (to_string(c) == s) return c;
  }
  throw std::invalid_argument("unknown category '" + std::string(s) + "'");
}

bool is_valid_flag(std::string_view flag) {
  static const std::regex jeopardy(R"(CTF\{[A-Za-z0-9_]{1,64}\})");
  static const std::regex interval(R"(ascflag\{[0-9]{1,10}-[0-9]{1,10}\})");
  std::string s(flag);
  return std::regex_match(s, jeopardy) || std::regex_match(s, interval);
}

bool constant_time_equals(std::string_view a, std::string_view b) {
  const std::size_t n = std::max(a.size(), b.size());
  unsigned diff = static_cast<unsigned>(a.size() ^ b.size());
  for (std::size_t i = 0; i < n; ++i) {
    unsigned char x = i < a.size() ? static_cast<unsigned char>(a[i]) : 0;
    unsigned char y = i < b.size() ? static_cast<unsigned char>(b[i]) : 0;
    diff |= static_cast<unsigned>(x ^ y);
  }
  return diff == 0;
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Challenge parse_challenge(std::string_view text) {
  Challenge c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  auto fail = [&](const std::string& msg) {
    throw PackError("line " + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line;
    std::string l = trim(raw);
    if (l.empty() || l[0] == '#') continue;
    auto sp = l.find(' ');
    std::string key = l.substr(0, sp);
    std::string value = sp == std::string::npos ? std::string() : trim(l.substr(sp + 1));
    if (key != "hint" && key != "description" && !seen.insert(key).second) {
      fail("duplicate key '" + key + "'");
    }
    if (key == "id") {
      c.id = value;
    } else if (key == "category") {
      try {
        c.category = parse_category(value);
      } catch (const std::invalid_argument& e) {
        fail(e.what());
      }
    } else if (key == "points") {
      auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), c.points);
      if (ec != std::errc() || p != value.data() + value.size()) fail("points must be an integer");
    } else if (key == "title") {
      c.title = value;
    } else if (key == "description") {
      c.description += (c.description.empty() ? "" : "\n") + value;
    } else if (key == "hint") {
      c.hints.push_back(value);
    } else if (key == "released") {
      if (value != "true" && value != "false") fail("released must be true or false");
      c.released = value == "true";
    } else {
      fail("unknown key '" + key + "'");
    }
  }
  if (c.id.empty()) throw PackError("challenge without id");
  if (c.points <= 0) throw PackError("challenge " + c.id + ": points must be positive");
  return c;
}

std::vector<Challenge> load_pack(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw PackError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".chal") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<Challenge> out;
  std::map<std::string, std::size_t> index;
  for (const auto& f : files) {
    std::ifstream in(f);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      out.push_back(parse_challenge(buf.str()));
    } catch (const PackError& e) {
      throw PackError(f.filename().string() + ": " + e.what());
    }
    if (!index.emplace(out.back().id, out.size() - 1).second) {
      throw PackError("duplicate challenge id " + out.back().id);
    }
  }

  std::ifstream flags(dir / "flags.txt");
  if (!flags) throw PackError("missing flags.txt");
  std::string raw;
  int line = 0;
  while (std::getline(flags, raw)) {
    ++line;
    std::string l = trim(raw);
    if (l.empty() || l[0] == '#') continue;
    auto sp = l.find(' ');
    if (sp == std::string::npos) throw PackError("flags.txt line " + std::to_string(line) + ": expected '<id> <flag>'");
    std::string id = l.substr(0, sp);
    std::string flag = trim(l.substr(sp + 1));
    auto it = index.find(id);
    if (it == index.end()) throw PackError("flags.txt: unknown challenge " + id);
    if (!is_valid_flag(flag)) throw PackError("flags.txt: malformed flag for " + id);
    if (!out[it->second].flag.empty()) throw PackError("flags.txt: second flag for " + id);
    out[it->second].flag = flag;
  }
  for (const auto& c : out) {
    if (c.flag.empty()) throw PackError("challenge " + c.id + " has no flag");
  }
  return out;
}

}  // namespace icsrange::game
