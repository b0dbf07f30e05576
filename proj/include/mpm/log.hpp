#pragma once

#include <atomic>
#include <iostream>
#include <string_view>

namespace mpm {

inline std::atomic<bool>& warnings_enabled() {
  static std::atomic<bool> enabled{true};
  return enabled;
}

inline void warn(std::string_view message) {
  if (warnings_enabled().load()) std::cerr << "warning: " << message << '\n';
}

inline void info(std::string_view message) { std::cerr << message << '\n'; }

}  // namespace mpm
