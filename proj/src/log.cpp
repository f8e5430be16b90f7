#include "adlex/log.hpp"

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace adlex::log {
namespace {

Level from_env() {
  const char* env = std::getenv("ADLEX_LOG");
  if (env == nullptr) return Level::Warn;
  std::string v(env);
  if (v == "error") return Level::Error;
  if (v == "info") return Level::Info;
  if (v == "debug") return Level::Debug;
  return Level::Warn;
}

std::atomic<int>& current() {
  static std::atomic<int> level{static_cast<int>(from_env())};
  return level;
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

constexpr const char* kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

Level threshold() { return static_cast<Level>(current().load()); }

void set_threshold(Level level) { current().store(static_cast<int>(level)); }

void write(Level level, std::string_view message) {
  if (static_cast<int>(level) > current().load()) return;
  std::lock_guard<std::mutex> lock(sink_mutex());
  std::cerr << "[adlex " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace adlex::log
