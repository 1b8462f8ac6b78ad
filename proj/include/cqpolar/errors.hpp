#pragma once
#include <stdexcept>
#include <string>

namespace cqpolar {

// Mismatched groups, bad subgroup relations, malformed operators.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A resource ceiling (dimension, branch count, group order) would be exceeded.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input that fails validation: schema, PSD, trace.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cqpolar
