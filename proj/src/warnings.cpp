#include "mixscale/warnings.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace mixscale {
namespace {
std::atomic<std::size_t> g_count{0};
std::atomic<bool> g_silenced{false};
std::mutex g_mutex;
}  // namespace

void warn(std::string_view message) {
  ++g_count;
  if (g_silenced.load()) return;
  std::lock_guard lock(g_mutex);
  std::cerr << "warning: " << message << '\n';
}

std::size_t warning_count() { return g_count.load(); }

void set_warnings_silenced(bool silenced) { g_silenced.store(silenced); }

}  // namespace mixscale
