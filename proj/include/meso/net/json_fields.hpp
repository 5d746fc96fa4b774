#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "meso/net/network.hpp"

// Strict field access for config documents. Every failure names the field.

namespace meso::net::cfg {

inline void check_fields(const nlohmann::json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown field '" + it.key() + "'");
}

template <typename T>
T require(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional(const nlohmann::json& obj, const std::string& key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  return require<T>(obj, key, where);
}

}  // namespace meso::net::cfg
