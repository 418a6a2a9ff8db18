#include "eggs/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace eggs::log {
namespace {

std::atomic<Level> g_level{Level::kInfo};
std::mutex g_mutex;

void emit(Level lvl, std::string_view tag, std::string_view msg) {
  if (lvl < g_level.load(std::memory_order_relaxed)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "[eggs " << tag << "] " << msg << '\n';
}

}  // namespace

void set_level(Level lvl) { g_level.store(lvl, std::memory_order_relaxed); }
Level level() { return g_level.load(std::memory_order_relaxed); }

void debug(std::string_view msg) { emit(Level::kDebug, "debug", msg); }
void info(std::string_view msg) { emit(Level::kInfo, "info", msg); }
void warn(std::string_view msg) { emit(Level::kWarn, "warn", msg); }
void error(std::string_view msg) { emit(Level::kError, "error", msg); }

}  // namespace eggs::log
