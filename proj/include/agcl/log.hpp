#pragma once

#include <nlohmann/json.hpp>

#include <string_view>

namespace agcl::log {

enum class Level { debug = 0, info = 1, warn = 2, error = 3 };

/// Minimum level written; events below it are dropped. Defaults to info.
void set_level(Level level);
Level level();

/// Writes one JSON object per line to stderr:
/// {"level": ..., "event": ..., <fields>}.
void event(Level level, std::string_view name, const nlohmann::json& fields = nlohmann::json::object());

inline void info(std::string_view name, const nlohmann::json& fields = nlohmann::json::object()) {
  event(Level::info, name, fields);
}
inline void warn(std::string_view name, const nlohmann::json& fields = nlohmann::json::object()) {
  event(Level::warn, name, fields);
}
inline void debug(std::string_view name, const nlohmann::json& fields = nlohmann::json::object()) {
  event(Level::debug, name, fields);
}

}  // namespace agcl::log
