#include "pref/threading.hpp"

#include <cstdlib>
#include <string>
#include <thread>

namespace pref {

namespace {
int resolve_default() {
  if (const char* env = std::getenv("PREF_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

int g_threads = resolve_default();
}  // namespace

int thread_count() { return g_threads; }

void set_thread_count(int n) { g_threads = n < 1 ? 1 : n; }

}  // namespace pref
