#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "reefsurvey/geometry.hpp"

namespace reef {

using Cycle = std::int64_t;

struct CellIndex {
  int row = 0;
  int col = 0;
  auto operator<=>(const CellIndex&) const = default;
};

std::string to_string(CellIndex c);

/// Compass order doubles as the tie-break order everywhere a direction is chosen.
enum class Direction { North, South, East, West };
inline constexpr std::array<Direction, 4> kDirections = {Direction::North, Direction::South,
                                                         Direction::East, Direction::West};
const char* to_string(Direction d);

/// Undirected boundary between two 4-adjacent cells; stored with a < b.
struct CellEdge {
  CellIndex a;
  CellIndex b;

  static CellEdge between(CellIndex p, CellIndex q) { return p < q ? CellEdge{p, q} : CellEdge{q, p}; }
  bool touches(CellIndex c) const { return a == c || b == c; }
  CellIndex other(CellIndex c) const { return a == c ? b : a; }
  auto operator<=>(const CellEdge&) const = default;
};

std::string to_string(const CellEdge& e);

/// Rectangular water column displacing the agent while it is inside and the
/// zone is both activated and within [t_start, t_end).
struct FlowZone {
  int id = 0;
  Rect bounds;
  Vec2 velocity;
  Cycle t_start = 0;
  Cycle t_end = 0;
};

class SurveyRegion {
 public:
  SurveyRegion() : SurveyRegion(20.0, 20.0, 5, 5) {}
  /// Throws std::invalid_argument unless rows x cols square cells tile the rectangle.
  SurveyRegion(double width, double height, int rows, int cols);

  double width() const { return width_; }
  double height() const { return height_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double cell_edge() const { return cell_edge_; }
  Rect bounds() const { return {0.0, 0.0, width_, height_}; }
  int cell_count() const { return rows_ * cols_; }

  bool in_bounds(CellIndex c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }
  /// Row grows northward (with y), column eastward (with x). Points on the far
  /// boundary belong to the last row/column.
  CellIndex cell_of(Vec2 p) const;
  Rect cell_bounds(CellIndex c) const;
  Vec2 cell_center(CellIndex c) const { return cell_bounds(c).center(); }
  int linear_index(CellIndex c) const { return c.row * cols_ + c.col; }
  CellIndex from_linear(int i) const { return {i / cols_, i % cols_}; }
  std::vector<CellIndex> cells() const;
  std::optional<CellIndex> neighbor(CellIndex c, Direction d) const;
  static bool adjacent(CellIndex a, CellIndex b);
  bool is_corner(CellIndex c) const;
  bool is_center(CellIndex c) const;

  const std::set<CellEdge>& blocked_edges() const { return blocked_edges_; }
  bool is_blocked(CellIndex a, CellIndex b) const { return blocked_edges_.contains(CellEdge::between(a, b)); }
  /// Returns false if the edge was already blocked. Throws for non-adjacent cells.
  bool block(const CellEdge& e);
  std::vector<CellEdge> interior_edges() const;

  const std::vector<FlowZone>& flow_zones() const { return flow_zones_; }
  /// Throws std::invalid_argument if the zone leaves the region or its window is empty.
  void add_flow_zone(const FlowZone& z);

 private:
  double width_;
  double height_;
  int rows_;
  int cols_;
  double cell_edge_;
  std::set<CellEdge> blocked_edges_;
  std::vector<FlowZone> flow_zones_;
};

struct FishTag {
  int id = 0;
  Vec2 position;
  int period = 17;
  int phase = 0;

  bool pings_at(Cycle t) const {
    const Cycle d = (t - phase) % period;
    return d == 0;
  }
};

struct Detection {
  int tag_id = 0;
  Cycle time = 0;
  Vec2 agent_position;
  bool operator==(const Detection&) const = default;
};

struct AgentState {
  Vec2 position;
  double base_speed = 1.0;
  int remora_count = 0;
  Cycle clock = 0;
  Cycle deadline = 600;
  std::vector<Detection> heard;

  /// base_speed * 0.5^remora_count, computed exactly.
  double effective_speed() const;
};

enum class AnomalyKind { Remora, Blockade, Flow };
const char* to_string(AnomalyKind k);

struct AnomalyEvent {
  AnomalyKind kind = AnomalyKind::Remora;
  Cycle onset = 0;
  CellEdge edge{};  // Blockade
  int zone_id = 0;  // Flow

  static AnomalyEvent remora(Cycle t) { return {AnomalyKind::Remora, t, {}, 0}; }
  static AnomalyEvent blockade(Cycle t, CellEdge e) { return {AnomalyKind::Blockade, t, e, 0}; }
  static AnomalyEvent flow(Cycle t, int zone) { return {AnomalyKind::Flow, t, {}, zone}; }
};

/// Velocity request for one cycle.
struct MoveCommand {
  Vec2 velocity;
};

/// Raised instead of moving when a command would cross a blocked boundary.
struct BlockedMove {
  Cycle time = 0;
  CellEdge edge;
  Vec2 position;
};

struct StepOutcome {
  std::vector<Detection> detections;
  std::optional<BlockedMove> blocked;
  Vec2 displacement;
};

/// Ground-truth world: region, static tags, agent kinematics and anomaly state.
/// One instance per trial; not shared between threads.
class World {
 public:
  World(SurveyRegion region, std::vector<FishTag> tags, AgentState agent, double sensor_radius = 2.0);

  /// Advances one cycle. Throws std::logic_error at or past the deadline.
  StepOutcome step(const MoveCommand& command);
  /// Tags pinging at the current clock within sensor range.
  std::vector<Detection> sense() const;
  /// Throws std::invalid_argument if event.onset differs from the clock or the
  /// payload does not name a valid edge or zone.
  void inject(const AnomalyEvent& event);
  void clear_remora() { agent_.remora_count = 0; }

  const SurveyRegion& region() const { return region_; }
  const std::vector<FishTag>& tags() const { return tags_; }
  const AgentState& agent() const { return agent_; }
  double sensor_radius() const { return sensor_radius_; }
  Cycle clock() const { return agent_.clock; }
  bool expired() const { return agent_.clock >= agent_.deadline; }
  bool flow_active(const FlowZone& z) const;
  const std::vector<BlockedMove>& blocked_moves() const { return blocked_moves_; }

 private:
  std::optional<CellEdge> first_blocked_crossing(Vec2 from, Vec2 to) const;
  void rebuild_ping_index();

  SurveyRegion region_;
  std::vector<FishTag> tags_;
  AgentState agent_;
  double sensor_radius_;
  std::set<int> activated_zones_;
  std::vector<BlockedMove> blocked_moves_;
  // ping_index_[p][r]: tag indices with period p and phase r.
  std::vector<std::vector<std::vector<int>>> ping_index_;
};

enum class CellClass { NotHotspot, Hotspot };

/// Inclusive threshold: hotspot iff unique_tag_count >= threshold.
/// Throws std::invalid_argument when threshold <= 0.
CellClass classify_cell(int unique_tag_count, int threshold);

/// Exhaustive per-cell tag count (ground truth input).
std::vector<int> count_tags_per_cell(const SurveyRegion& region, const std::vector<FishTag>& tags);

}  // namespace reef
