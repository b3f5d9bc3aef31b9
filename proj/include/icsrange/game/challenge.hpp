#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace icsrange::game {

enum class Category { minicps, trivia, forensics, plc, misc };
std::string_view to_string(Category c);
Category parse_category(std::string_view s);

struct Challenge {
  std::string id;
  Category category = Category::misc;
  int points = 0;
  std::string title;
  std::string description;
  std::vector<std::string> hints;
  std::string flag;  // secret
  bool released = true;
};

/// `CTF{[A-Za-z0-9_]{1,64}}`, or `ascflag{A-B}` with decimal A and B.
bool is_valid_flag(std::string_view flag);

/// Comparison whose running time depends only on the lengths.
bool constant_time_equals(std::string_view a, std::string_view b);

class PackError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Challenge file, one `key value` per line:
///   id, category, points, title, description (repeatable, joined by
///   newlines), hint (repeatable, ordered), released (true|false).
Challenge parse_challenge(std::string_view text);

/// A pack directory holds `*.chal` files and a `flags.txt` secret file with
/// one `<challenge-id> <flag>` per line.
std::vector<Challenge> load_pack(const std::filesystem::path& dir);

}  // namespace icsrange::game
