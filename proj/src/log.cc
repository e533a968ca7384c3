#include "kbc/log.h"

#include <atomic>
#include <iostream>
#include <mutex>

namespace kbc {
namespace {

std::atomic<bool> g_quiet{false};
std::atomic<std::size_t> g_warnings{0};
std::mutex g_mutex;

}  // namespace

void Warn(std::string_view message) {
  g_warnings.fetch_add(1, std::memory_order_relaxed);
  if (g_quiet.load(std::memory_order_relaxed)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "warning: " << message << '\n';
}

void Info(std::string_view message) {
  if (g_quiet.load(std::memory_order_relaxed)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << message << '\n';
}

void SetLogQuiet(bool quiet) { g_quiet.store(quiet, std::memory_order_relaxed); }

std::size_t WarningCount() { return g_warnings.load(std::memory_order_relaxed); }

}  // namespace kbc
