#pragma once

#include <cstdio>
#include <cstdlib>
#include <string_view>
#include <utility>

#include <fmt/core.h>

namespace termforge::log {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Verbosity from TERMFORGE_LOG (error|warn|info|debug); defaults to warn.
inline Level threshold() {
  static const Level level = [] {
    const char* env = std::getenv("TERMFORGE_LOG");
    std::string_view v = env ? env : "";
    if (v == "error") return Level::Error;
    if (v == "info") return Level::Info;
    if (v == "debug") return Level::Debug;
    return Level::Warn;
  }();
  return level;
}

template <typename... Args>
void write(Level level, std::string_view tag, fmt::format_string<Args...> format, Args&&... args) {
  if (level > threshold()) return;
  fmt::print(stderr, "[{}] {}\n", tag, fmt::format(format, std::forward<Args>(args)...));
}

template <typename... Args>
void warn(fmt::format_string<Args...> format, Args&&... args) {
  write(Level::Warn, "warn", format, std::forward<Args>(args)...);
}

template <typename... Args>
void info(fmt::format_string<Args...> format, Args&&... args) {
  write(Level::Info, "info", format, std::forward<Args>(args)...);
}

template <typename... Args>
void debug(fmt::format_string<Args...> format, Args&&... args) {
  write(Level::Debug, "debug", format, std::forward<Args>(args)...);
}

}  // namespace termforge::log
