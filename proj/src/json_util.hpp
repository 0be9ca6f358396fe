#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace mapfuse {

/// Walks a user document against a fully-populated default tree and throws
/// on any key the defaults do not know, naming its full path.
inline void reject_unknown(const nlohmann::json& user,
                           const nlohmann::json& schema,
                           const std::string& path) {
  if (!user.is_object()) return;
  for (const auto& [key, value] : user.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    if (!schema.is_object() || !schema.contains(key))
      throw std::runtime_error("unknown config key: " + here);
    if (value.is_object()) reject_unknown(value, schema.at(key), here);
  }
}

/// Reads j[key] into out when present; type errors name the key path.
template <class T>
void get_if(const nlohmann::json& j, const char* key, T& out,
            const std::string& path) {
  if (!j.contains(key)) return;
  const std::string name = path.empty() ? std::string(key) : path + "." + key;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("config key " + name + ": " + e.what());
  }
}

}  // namespace mapfuse
