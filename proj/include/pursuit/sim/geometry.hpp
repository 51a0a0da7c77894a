#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <string_view>

namespace pursuit {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }
  friend Vec2 operator*(double s, Vec2 a) { return {a.x * s, a.y * s}; }
  friend bool operator==(const Vec2&, const Vec2&) = default;

  double norm() const { return std::hypot(x, y); }
};

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

// Integer grid coordinate. Ordering is (y, x) lexicographic, which is the
// tie-break order used by every planner and policy.
struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend std::strong_ordering operator<=>(const Cell& a, const Cell& b) {
    if (auto c = a.y <=> b.y; c != 0) return c;
    return a.x <=> b.x;
  }
};

inline Vec2 cell_center(Cell c) { return {c.x + 0.5, c.y + 0.5}; }

inline constexpr double kPi = 3.14159265358979323846;

enum class Domain : std::uint8_t { prison, narco };

enum class AgentType : std::uint8_t {
  camera,
  search_party,
  helicopter,
  airplane,
  marine_vessel,
  adversary,
};

inline constexpr int kAgentTypeCount = 6;
inline constexpr int kBlueTypeCount = 5;

std::string_view to_string(Domain d);
std::string_view to_string(AgentType t);
Domain parse_domain(std::string_view s);
AgentType parse_agent_type(std::string_view s);

// Airborne agents ignore the water mask.
inline bool is_airborne(AgentType t) {
  return t == AgentType::helicopter || t == AgentType::airplane;
}

}  // namespace pursuit
