#pragma once

#include <stdexcept>
#include <string>

namespace magstep {

// kind() is the machine-readable tag; solver_failure() selects CLI exit code 2 over 1.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& msg, bool solver = false)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)), solver_(solver) {}
  const std::string& kind() const { return kind_; }
  bool solver_failure() const { return solver_; }

private:
  std::string kind_;
  bool solver_;
};

#define MAGSTEP_ERROR(Name, solver)                                             \
  struct Name : Error {                                                         \
    explicit Name(const std::string& msg) : Error(#Name, msg, solver) {}        \
  };

MAGSTEP_ERROR(InvalidInput, false)
MAGSTEP_ERROR(ZeroField, false)
MAGSTEP_ERROR(WrongOrientation, false)
MAGSTEP_ERROR(MeshTooCoarse, false)
MAGSTEP_ERROR(NoBoundState, false)
MAGSTEP_ERROR(NotConverged, true)
MAGSTEP_ERROR(NoInteriorMinimum, true)
MAGSTEP_ERROR(NoRoot, true)
MAGSTEP_ERROR(QuadratureUnresolved, true)
MAGSTEP_ERROR(DegenerateEigenvalue, true)

#undef MAGSTEP_ERROR

}  // namespace magstep
