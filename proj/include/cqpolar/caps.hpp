#pragma once
#include <cstddef>
#include <cstdlib>
#include <string>

namespace cqpolar {

// Resource ceilings. Exceeding one raises CapacityError, never an approximation.
struct Caps {
  std::size_t dim_cap = 4096;                 // quantum dimension of a synthesised channel
  std::size_t branch_cap = 1u << 16;          // classical branches per output state
  std::size_t classical_output_cap = 1u << 22;  // merged outputs of a diagonal channel

  // Defaults, with CQPOLAR_DIM_CAP honoured when set.
  static Caps defaults() {
    Caps c;
    if (const char* e = std::getenv("CQPOLAR_DIM_CAP")) {
      char* end = nullptr;
      unsigned long long v = std::strtoull(e, &end, 10);
      if (end != e && v > 0) c.dim_cap = static_cast<std::size_t>(v);
    }
    return c;
  }
};

}  // namespace cqpolar
