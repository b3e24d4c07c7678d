#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "errors.hpp"

namespace magstep {

enum class FieldCase { MagneticWall, Trapping, SymmetricTrapping, NonTrapping, Uniform, Other };

inline const char* to_string(FieldCase c) {
  switch (c) {
    case FieldCase::MagneticWall: return "MagneticWall";
    case FieldCase::Trapping: return "Trapping";
    case FieldCase::SymmetricTrapping: return "SymmetricTrapping";
    case FieldCase::NonTrapping: return "NonTrapping";
    case FieldCase::Uniform: return "Uniform";
    case FieldCase::Other: return "Other";
  }
  return "?";
}

// b1 acts for t < 0 (lower region), b2 for t > 0. Stored values are canonical
// (max |b_i| = 1); scale is the factor that was divided out.
struct StepField {
  double b1 = 1.0;
  double b2 = 1.0;
  double scale = 1.0;
  FieldCase kind = FieldCase::Uniform;

  double sigma(double t) const { return t < 0 ? b1 : b2; }
  bool trapping() const {
    return kind == FieldCase::Trapping || kind == FieldCase::SymmetricTrapping;
  }
  StepField reflected() const;
};

inline FieldCase case_of(double b1, double b2) {
  auto is = [](double a, double v) { return a == v; };
  auto in_open = [](double b, double lo, double hi) { return b > lo && b < hi; };
  if ((is(b1, 0) && is(b2, 1)) || (is(b1, 1) && is(b2, 0))) return FieldCase::MagneticWall;
  if ((is(b1, -1) && is(b2, 1)) || (is(b1, 1) && is(b2, -1))) return FieldCase::SymmetricTrapping;
  if ((is(b1, 1) && in_open(b2, -1, 0)) || (is(b2, 1) && in_open(b1, -1, 0)))
    return FieldCase::Trapping;
  if ((is(b1, 1) && in_open(b2, 0, 1)) || (is(b2, 1) && in_open(b1, 0, 1)))
    return FieldCase::NonTrapping;
  if (b1 == b2 && b1 != 0) return FieldCase::Uniform;
  return FieldCase::Other;
}

inline StepField classify(double b1, double b2) {
  if (!std::isfinite(b1) || !std::isfinite(b2)) throw InvalidInput("field values must be finite");
  if (b1 == 0 && b2 == 0) throw ZeroField("b1 = b2 = 0");
  StepField f;
  f.scale = std::max(std::abs(b1), std::abs(b2));
  f.b1 = b1 / f.scale;
  f.b2 = b2 / f.scale;
  // snap round-off so that e.g. (3,-3) lands exactly on (1,-1)
  for (double* b : {&f.b1, &f.b2})
    for (double v : {-1.0, 0.0, 1.0})
      if (std::abs(*b - v) < 1e-14) *b = v;
  f.kind = case_of(f.b1, f.b2);
  return f;
}

// t -> -t swaps the two intensities.
inline StepField StepField::reflected() const {
  StepField r = *this;
  std::swap(r.b1, r.b2);
  r.kind = case_of(r.b1, r.b2);
  return r;
}

inline double potential(const StepField& f, double xi, double t) {
  if (t == 0) return xi * xi;
  double s = f.sigma(t) * t + xi;
  return s * s;
}

}  // namespace magstep
