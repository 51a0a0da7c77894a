#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "pursuit/config.hpp"
#include "pursuit/sim/geometry.hpp"
#include "pursuit/sim/terrain.hpp"

namespace pursuit {

class EnvError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Status : std::uint8_t { running, reached_hideout, captured, timeout };

std::string_view to_string(Status s);
Status parse_status(std::string_view s);

struct AgentState {
  Vec2 position;  // cell units
  AgentType type = AgentType::camera;
  double speed = 0.0;               // maximum, cells per step
  double detect_radius_base = 0.0;  // cells
  int timestep = 0;
};

// Normalized state vector: [x/width, y/height, one_hot(type), t/t_max].
std::vector<double> state_vector(const AgentState& a, int width, int height, int t_max);
inline constexpr int kStateDim = 2 + kAgentTypeCount + 1;

// One blue agent's per-step observation; position is normalized and (0, 0)
// when nothing was detected.
struct Observation {
  bool detected = false;
  Vec2 position;

  friend bool operator==(const Observation&, const Observation&) = default;
};

// A sighting in the shared history. detected_by is -1 for the initial tip-off
// that opens a narco episode.
struct Detection {
  int t = 0;
  Vec2 position;  // normalized
  int detected_by = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct Action {
  double heading = 0.0;  // radians
  double speed = 0.0;    // cells per step
};

struct EnvState {
  std::shared_ptr<const TerrainGrid> terrain;
  Domain domain = Domain::prison;
  int t_max = 0;
  double capture_radius = 0.0;  // cells

  std::vector<AgentState> blue;
  AgentState adversary;
  std::vector<Observation> observations;
  std::vector<Detection> detections;
  std::vector<std::uint8_t> rendezvous_visited;
  int step = 0;
  Status status = Status::running;

  bool running() const { return status == Status::running; }
  bool all_rendezvous_visited() const;
};

// Detection radius against a target standing in target_cell:
// base radius scaled linearly by the target cell's visibility.
double effective_radius(const AgentState& agent, const TerrainGrid& terrain, Cell target_cell);

Observation sense(const AgentState& blue, Vec2 adversary_pos, const TerrainGrid& terrain);

// Initial state at t = 0, agents placed from the seed, sensing already done.
EnvState reset_env(const DomainSpec& spec, std::shared_ptr<const TerrainGrid> terrain, std::uint64_t seed);

// Advances one step in place. Throws EnvError on a terminated state, on an
// action count mismatch or when an action exceeds the agent's max speed.
void step_env(EnvState& state, std::span<const Action> blue_actions, Action adversary_action);

// Moves a position by heading x speed, clipped to the grid and to cells the
// agent type may occupy (axis-aligned sliding, else no motion).
Vec2 integrate_motion(Vec2 pos, Action a, AgentType type, const TerrainGrid& terrain);

}  // namespace pursuit
