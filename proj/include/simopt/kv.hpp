#pragma once

#include "simopt/common.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simopt {

/// Formats a double with 17 significant digits (round-trips exactly).
[[nodiscard]] std::string format_double(double v);

[[nodiscard]] std::string format_vector(const Vector& v, char sep = ',');
[[nodiscard]] Vector parse_vector(std::string_view text, char sep = ',');

/// Nested key-value text document.
///
///     # comment
///     top = 1
///     [prior]
///     kernel = gaussian
///     [algorithm.strong]
///     gamma1 = 0.5
///
/// Section headers prefix the keys that follow ("algorithm.strong.gamma1").
/// Keys are stored flat and sorted; serialize() writes the canonical form,
/// one `key = value` line per entry in key order.
class KvDoc {
 public:
  KvDoc() = default;

  [[nodiscard]] static KvDoc parse(std::string_view text);
  [[nodiscard]] static KvDoc load(const std::string& path);
  [[nodiscard]] std::string serialize() const;
  void save(const std::string& path) const;

  [[nodiscard]] bool has(const std::string& key) const { return entries_.count(key) != 0; }
  [[nodiscard]] const std::string& at(const std::string& key) const;
  [[nodiscard]] std::optional<std::string> find(const std::string& key) const;

  [[nodiscard]] std::string get_string(const std::string& key, const std::string& fallback) const;
  [[nodiscard]] double get_double(const std::string& key) const;
  [[nodiscard]] double get_double(const std::string& key, double fallback) const;
  [[nodiscard]] long long get_int(const std::string& key) const;
  [[nodiscard]] long long get_int(const std::string& key, long long fallback) const;
  [[nodiscard]] bool get_bool(const std::string& key, bool fallback) const;
  [[nodiscard]] Vector get_vector(const std::string& key) const;
  [[nodiscard]] std::vector<std::string> get_list(const std::string& key) const;

  void set(const std::string& key, std::string value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, long long value);
  void set(const std::string& key, int value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, std::size_t value) { set(key, static_cast<long long>(value)); }
  void set(const std::string& key, const Vector& value);
  void erase(const std::string& key) { entries_.erase(key); }

  /// Entries under `prefix.` with the prefix stripped.
  [[nodiscard]] KvDoc subtree(const std::string& prefix) const;
  /// Inserts all entries of `other` under `prefix.`.
  void merge(const std::string& prefix, const KvDoc& other);

  /// Applies a `key=value` override.
  void apply_override(std::string_view assignment);

  [[nodiscard]] const std::map<std::string, std::string>& entries() const { return entries_; }
  [[nodiscard]] bool operator==(const KvDoc&) const = default;

 private:
  std::map<std::string, std::string> entries_;
};

/// FNV-1a 64-bit hash, hex encoded.
[[nodiscard]] std::string fnv1a_hex(std::string_view text);

}  // namespace simopt
