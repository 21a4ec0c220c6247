#include "agcl/log.hpp"

#include <atomic>
#include <cstdio>
#include <string>

namespace agcl::log {

namespace {
std::atomic<Level> g_level{Level::info};

const char* level_name(Level l) {
  switch (l) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    case Level::error: return "error";
  }
  return "info";
}
}  // namespace

void set_level(Level level) { g_level = level; }
Level level() { return g_level; }

void event(Level level, std::string_view name, const nlohmann::json& fields) {
  if (level < g_level.load()) return;
  nlohmann::json line = {{"level", level_name(level)}, {"event", std::string(name)}};
  for (const auto& [k, v] : fields.items()) line[k] = v;
  const std::string text = line.dump() + "\n";
  std::fwrite(text.data(), 1, text.size(), stderr);
}

}  // namespace agcl::log
