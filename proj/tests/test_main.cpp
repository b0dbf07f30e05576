#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "mpm/log.hpp"

int main(int argc, char** argv) {
  mpm::warnings_enabled() = false;
  doctest::Context context(argc, argv);
  return context.run();
}
