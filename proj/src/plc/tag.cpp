#include "icsrange/plc/tag.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace icsrange::plc {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

}  // namespace

bool is_valid_tag_name(std::string_view text) {
  auto colon = text.find(':');
  std::string_view name = text.substr(0, colon);
  if (name.empty() || !ident_start(name[0])) return false;
  for (char c : name) {
    if (!ident_char(c)) return false;
  }
  if (colon == std::string_view::npos) return true;
  std::string_view inst = text.substr(colon + 1);
  if (inst.empty()) return false;
  for (char c : inst) {
    if (!ident_char(c)) return false;
  }
  return true;
}

TagAddress TagAddress::parse(std::string_view text) {
  if (!is_valid_tag_name(text)) {
    throw std::invalid_argument("malformed tag address '" + std::string(text) + "'");
  }
  auto colon = text.find(':');
  if (colon == std::string_view::npos) return {std::string(text), {}};
  return {std::string(text.substr(0, colon)), std::string(text.substr(colon + 1))};
}

std::string TagAddress::format() const {
  return instance.empty() ? name : name + ":" + instance;
}

std::string to_text(const TagValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v)) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), *d);
    std::string out(buf, end);
    // Keep doubles distinguishable from integers on the wire.
    if (std::isfinite(*d) && out.find_first_of(".eE") == std::string::npos) out += ".0";
    return out;
  }
  return std::get<std::string>(v);
}

TagValue from_text(std::string_view text) {
  if (text.empty()) return std::string();
  const char* first = text.data();
  const char* last = text.data() + text.size();
  std::int64_t i = 0;
  if (auto [p, ec] = std::from_chars(first, last, i); ec == std::errc() && p == last) {
    return i;
  }
  double d = 0.0;
  if (auto [p, ec] = std::from_chars(first, last, d); ec == std::errc() && p == last) {
    return d;
  }
  return std::string(text);
}

std::optional<double> as_number(const TagValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nullopt;
}

void TagDatabase::declare(std::string_view name, TagValue initial, bool writable) {
  TagRecord r;
  r.address = TagAddress::parse(name);
  r.value = std::move(initial);
  r.writable = writable;
  r.owner = owner_;
  auto [it, inserted] = tags_.emplace(std::string(name), std::move(r));
  if (!inserted) throw std::invalid_argument("duplicate tag '" + std::string(name) + "'");
}

bool TagDatabase::contains(std::string_view name) const { return tags_.find(name) != tags_.end(); }

TagValue TagDatabase::read(std::string_view name, double ts) {
  auto it = tags_.find(name);
  if (historian_) {
    historian_->append({ts, owner_, HistorianEntry::Op::read, std::string(name),
                        it == tags_.end() ? std::string() : to_text(it->second.value),
                        it != tags_.end()});
  }
  if (it == tags_.end()) throw UnknownTag("unknown tag '" + std::string(name) + "'");
  return it->second.value;
}

WriteStatus TagDatabase::write(std::string_view name, TagValue value, double ts) {
  auto it = tags_.find(name);
  WriteStatus status = WriteStatus::ok;
  if (it == tags_.end()) {
    status = WriteStatus::unknown_tag;
  } else if (!it->second.writable) {
    status = WriteStatus::read_only;
  }
  if (historian_) {
    historian_->append({ts, owner_, HistorianEntry::Op::write, std::string(name), to_text(value),
                        status == WriteStatus::ok});
  }
  if (status == WriteStatus::ok) {
    it->second.value = std::move(value);
    it->second.updated_at = ts;
  }
  return status;
}

void TagDatabase::set(std::string_view name, TagValue value, double ts) {
  auto it = tags_.find(name);
  if (it == tags_.end()) throw UnknownTag("unknown tag '" + std::string(name) + "'");
  it->second.value = std::move(value);
  it->second.updated_at = ts;
}

const TagRecord& TagDatabase::record(std::string_view name) const {
  auto it = tags_.find(name);
  if (it == tags_.end()) throw UnknownTag("unknown tag '" + std::string(name) + "'");
  return it->second;
}

}  // namespace icsrange::plc
