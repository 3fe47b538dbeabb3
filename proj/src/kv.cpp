#include "simopt/kv.hpp"

#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace simopt {

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, std::string_view text) {
  const std::string s(trim(text));
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
    throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_vector(const Vector& v, char sep) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += format_double(v[i]);
  }
  return out;
}

Vector parse_vector(std::string_view text, char sep) {
  std::vector<double> values;
  std::size_t start = 0;
  const auto t = trim(text);
  if (t.empty()) return Vector(0);
  while (start <= t.size()) {
    auto pos = t.find(sep, start);
    if (pos == std::string_view::npos) pos = t.size();
    values.push_back(to_double("vector", t.substr(start, pos - start)));
    start = pos + 1;
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

KvDoc KvDoc::parse(std::string_view text) {
  KvDoc doc;
  std::string section;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = std::string(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    const auto full = section.empty() ? key : section + "." + key;
    doc.entries_[full] = std::string(trim(line.substr(eq + 1)));
  }
  return doc;
}

KvDoc KvDoc::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string KvDoc::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  }
  return out;
}

void KvDoc::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << serialize();
}

const std::string& KvDoc::at(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing key '" + key + "'");
  return it->second;
}

std::optional<std::string> KvDoc::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::string KvDoc::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double KvDoc::get_double(const std::string& key) const { return to_double(key, at(key)); }

double KvDoc::get_double(const std::string& key, double fallback) const {
  const auto v = find(key);
  return v ? to_double(key, *v) : fallback;
}

long long KvDoc::get_int(const std::string& key) const {
  const auto& s = at(key);
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + s + "'");
  }
  return v;
}

long long KvDoc::get_int(const std::string& key, long long fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool KvDoc::get_bool(const std::string& key, bool fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("key '" + key + "': expected a boolean, got '" + *v + "'");
}

Vector KvDoc::get_vector(const std::string& key) const {
  try {
    return parse_vector(at(key));
  } catch (const ConfigError&) {
    throw ConfigError("key '" + key + "': expected a comma-separated list of numbers");
  }
}

std::vector<std::string> KvDoc::get_list(const std::string& key) const {
  std::vector<std::string> out;
  const auto& s = at(key);
  std::size_t start = 0;
  while (start <= s.size()) {
    auto pos = s.find(',', start);
    if (pos == std::string::npos) pos = s.size();
    auto item = trim(std::string_view(s).substr(start, pos - start));
    if (!item.empty()) out.emplace_back(item);
    start = pos + 1;
  }
  return out;
}

void KvDoc::set(const std::string& key, std::string value) { entries_[key] = std::move(value); }
void KvDoc::set(const std::string& key, double value) { entries_[key] = format_double(value); }
void KvDoc::set(const std::string& key, long long value) { entries_[key] = std::to_string(value); }
void KvDoc::set(const std::string& key, const Vector& value) { entries_[key] = format_vector(value); }

KvDoc KvDoc::subtree(const std::string& prefix) const {
  KvDoc out;
  const auto p = prefix + ".";
  for (auto it = entries_.lower_bound(p); it != entries_.end(); ++it) {
    if (it->first.compare(0, p.size(), p) != 0) break;
    out.entries_[it->first.substr(p.size())] = it->second;
  }
  return out;
}

void KvDoc::merge(const std::string& prefix, const KvDoc& other) {
  for (const auto& [k, v] : other.entries_) entries_[prefix.empty() ? k : prefix + "." + k] = v;
}

void KvDoc::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError("override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const auto key = std::string(trim(assignment.substr(0, eq)));
  if (key.empty()) throw ConfigError("override with empty key");
  entries_[key] = std::string(trim(assignment.substr(eq + 1)));
}

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace simopt
