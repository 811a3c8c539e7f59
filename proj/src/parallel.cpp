#include "bohm/parallel.hpp"

#include <cstdlib>
#include <string>

namespace bohm {

int resolve_threads(int requested) {
  if (const char* env = std::getenv("BOHM_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? int(hw) : 1;
}

}  // namespace bohm
