#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace rhsim {

// Verbosity from RHSIM_LOG: unset/0 = quiet, "info"/1 = progress notes,
// "debug"/2 = chatty.
inline int log_level() {
  static int level = [] {
    const char* v = std::getenv("RHSIM_LOG");
    if (!v) return 0;
    if (std::strcmp(v, "debug") == 0 || std::strcmp(v, "2") == 0) return 2;
    if (std::strcmp(v, "info") == 0 || std::strcmp(v, "1") == 0) return 1;
    return 0;
  }();
  return level;
}

template <typename... Args>
void log_info(const char* fmt, Args... args) {
  if (log_level() >= 1) {
    std::fprintf(stderr, "[rhsim] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

template <typename... Args>
void log_debug(const char* fmt, Args... args) {
  if (log_level() >= 2) {
    std::fprintf(stderr, "[rhsim:debug] ");
    std::fprintf(stderr, fmt, args...);
    std::fprintf(stderr, "\n");
  }
}

}  // namespace rhsim
