#pragma once
// Small shared types. Units throughout the library are N, mm, MPa.

#include <cmath>
#include <stdexcept>
#include <string>

namespace pfm {

inline constexpr const char* kVersion = "0.1.0";

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

// Linear-solver failure; carries the achieved residual so callers can report it.
class SolveError : public std::runtime_error {
 public:
  SolveError(const std::string& what, int iterations, double residual, int step = -1)
      : std::runtime_error(what), iterations(iterations), residual(residual), step(step) {}
  int iterations;
  double residual;
  int step;  // load-step index when raised from a simulation run, else -1
};

class IoError : public std::runtime_error {
 public:
  enum class Kind { Malformed, VersionMismatch, Truncated, Unwritable };

  IoError(Kind kind, const std::string& what) : std::runtime_error(what), kind(kind) {}
  Kind kind;
};

}  // namespace pfm
