#pragma once

#include <stdexcept>
#include <string>

namespace tlsecho {

// A nonlinear fit did not converge, found no admissible solution, or hit a
// degenerate configuration (e.g. a vanishing profiled model).
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An input file violates the documented schema. The message names the
// offending field.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The requested integration window does not fit inside the trace.
class WindowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tlsecho
