#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace icsrange::plc {

class UnknownTag : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// `NAME` or `NAME:instance`, e.g. `README:2`.
struct TagAddress {
  std::string name;
  std::string instance;

  static TagAddress parse(std::string_view text);
  std::string format() const;
  bool operator==(const TagAddress&) const = default;
};

bool is_valid_tag_name(std::string_view text);

using TagValue = std::variant<std::int64_t, double, std::string>;

/// Wire/text form; doubles use the shortest representation that round-trips.
std::string to_text(const TagValue& v);
/// Integer if the text is an integer literal, double if it parses fully as a
/// number, string otherwise.
TagValue from_text(std::string_view text);
std::optional<double> as_number(const TagValue& v);

struct TagRecord {
  TagAddress address;
  TagValue value;
  bool writable = false;
  std::string owner;
  double updated_at = 0.0;
};

enum class WriteStatus { ok, unknown_tag, read_only };

struct HistorianEntry {
  double ts = 0.0;
  std::string device;
  enum class Op { read, write } op = Op::read;
  std::string tag;
  std::string value;
  bool accepted = true;
};

/// Append-only mirror of tag traffic.
class Historian {
 public:
  void append(HistorianEntry e) { log_.push_back(std::move(e)); }
  const std::vector<HistorianEntry>& log() const { return log_; }
  std::size_t size() const { return log_.size(); }

 private:
  std::vector<HistorianEntry> log_;
};

/// Per-device tag store. Reads and writes through `read`/`write` are mirrored
/// to the attached historian; `set` is the device's own internal update path.
class TagDatabase {
 public:
  explicit TagDatabase(std::string owner = {}) : owner_(std::move(owner)) {}

  void declare(std::string_view name, TagValue initial, bool writable);
  bool contains(std::string_view name) const;

  TagValue read(std::string_view name, double ts = 0.0);
  WriteStatus write(std::string_view name, TagValue value, double ts = 0.0);
  void set(std::string_view name, TagValue value, double ts = 0.0);
  const TagRecord& record(std::string_view name) const;
  const std::map<std::string, TagRecord, std::less<>>& records() const { return tags_; }

  void attach_historian(Historian* h) { historian_ = h; }
  const std::string& owner() const { return owner_; }

 private:
  std::string owner_;
  std::map<std::string, TagRecord, std::less<>> tags_;
  Historian* historian_ = nullptr;
};

}  // namespace icsrange::plc
