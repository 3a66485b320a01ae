#include "aat/log.hpp"

#include <atomic>
#include <mutex>

namespace aat::log {
namespace {

std::atomic<Level> g_threshold{Level::kInfo};
std::atomic<long> g_warnings{0};
std::mutex g_mutex;

const char* tag(Level level) {
  switch (level) {
    case Level::kDebug: return "debug";
    case Level::kInfo: return "info";
    case Level::kWarn: return "warn";
    case Level::kError: return "error";
    default: return "";
  }
}

}  // namespace

Level threshold() { return g_threshold.load(); }
void set_threshold(Level level) { g_threshold.store(level); }

void write(Level level, std::string_view message) {
  if (level == Level::kWarn) ++g_warnings;
  if (level < g_threshold.load()) return;
  std::lock_guard lock(g_mutex);
  std::clog << '[' << tag(level) << "] " << message << '\n';
}

long warning_count() { return g_warnings.load(); }

}  // namespace aat::log
