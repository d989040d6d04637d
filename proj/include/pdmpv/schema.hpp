#pragma once

// Small helpers for reading JSON documents with path-carrying errors.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace pdmpv {

/// A document that parses as JSON but violates a schema. `path` is a JSON
/// pointer to the offending value.
class SchemaError : public std::invalid_argument {
 public:
  SchemaError(std::string path, const std::string& message)
      : std::invalid_argument(path + ": " + message), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

namespace schema {

inline std::string child(const std::string& path, const std::string& key) {
  return path + "/" + key;
}
inline std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

inline const nlohmann::json& member(const nlohmann::json& obj, const std::string& key,
                                    const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(child(path, key), "required key is missing");
  return *it;
}

inline double number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  return v.get<double>();
}

inline double number(const nlohmann::json& obj, const std::string& key,
                     const std::string& path) {
  return number(member(obj, key, path), child(path, key));
}

inline double number_or(const nlohmann::json& obj, const std::string& key,
                        const std::string& path, double fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return number(obj.at(key), child(path, key));
}

inline double positive(const nlohmann::json& obj, const std::string& key,
                       const std::string& path) {
  const double v = number(obj, key, path);
  if (!(v > 0.0)) throw SchemaError(child(path, key), "must be positive");
  return v;
}

inline std::uint64_t unsigned_integer(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw SchemaError(path, "expected a nonnegative integer");
  }
  return v.get<std::uint64_t>();
}

inline std::string string(const nlohmann::json& obj, const std::string& key,
                          const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_string()) throw SchemaError(child(path, key), "expected a string");
  return v.get<std::string>();
}

inline const nlohmann::json& array(const nlohmann::json& obj, const std::string& key,
                                   const std::string& path) {
  const auto& v = member(obj, key, path);
  if (!v.is_array()) throw SchemaError(child(path, key), "expected an array");
  return v;
}

inline std::vector<double> numbers(const nlohmann::json& v, const std::string& path) {
  if (!v.is_array()) throw SchemaError(path, "expected an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // JSON has no infinities; accept the strings "inf" and "-inf" for bounds
    if (v[i].is_string()) {
      const auto s = v[i].get<std::string>();
      if (s == "inf" || s == "+inf") { out.push_back(HUGE_VAL); continue; }
      if (s == "-inf") { out.push_back(-HUGE_VAL); continue; }
    }
    out.push_back(number(v[i], child(path, i)));
  }
  return out;
}

}  // namespace schema
}  // namespace pdmpv
