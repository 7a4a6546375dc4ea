#pragma once

// Minimal stderr diagnostics controlled by OBSTACLE_PATH_LOG=debug|info.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>
#include <string>

namespace obstacle_path::log {

enum class Level { Off = 0, Info = 1, Debug = 2 };

inline Level level() {
  static const Level lvl = [] {
    const char* env = std::getenv("OBSTACLE_PATH_LOG");
    if (env == nullptr) return Level::Off;
    if (std::strcmp(env, "debug") == 0) return Level::Debug;
    if (std::strcmp(env, "info") == 0) return Level::Info;
    return Level::Off;
  }();
  return lvl;
}

inline void write(Level at, const char* tag, const std::string& msg) {
  if (static_cast<int>(level()) < static_cast<int>(at)) return;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[obstacle_path %s] %s\n", tag, msg.c_str());
}

inline void info(const std::string& msg) { write(Level::Info, "info", msg); }
inline void debug(const std::string& msg) { write(Level::Debug, "debug", msg); }

}  // namespace obstacle_path::log
