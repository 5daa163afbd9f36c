#pragma once

#include <array>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "reefsurvey/geometry.hpp"
#include "reefsurvey/sim.hpp"

namespace reef {

enum class Strategy { SS, ES, ESCSS };
const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

/// Expected unique tags beyond each cell boundary.
struct EdgeEstimates {
  double north = 0.0;
  double south = 0.0;
  double east = 0.0;
  double west = 0.0;

  double get(Direction d) const;
  void set(Direction d, double v);
  bool operator==(const EdgeEstimates&) const = default;
};

struct VisitedEntry {
  CellIndex cell;
  int count = 0;
  bool operator==(const VisitedEntry&) const = default;
};

/// Surveyed cells for backtracking; back() is the top.
class VisitedStack {
 public:
  /// Throws std::invalid_argument if the cell is already on the stack.
  void push(CellIndex cell, int count);
  VisitedEntry pop();
  const VisitedEntry& top() const { return entries_.back(); }
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  bool contains(CellIndex c) const;
  const std::vector<VisitedEntry>& entries() const { return entries_; }
  /// Ascending by count so the best cell ends on top; equal counts keep the
  /// lower CellIndex nearer the top.
  void sort_by_max_unique_tags();

 private:
  std::vector<VisitedEntry> entries_;
};

/// Best unvisited 4-neighbour of `cell` by edge estimate, ties broken N, S, E, W.
std::optional<CellIndex> unvisited_max_cell(const SurveyRegion& region, CellIndex cell, const EdgeEstimates& e,
                                            const std::set<CellIndex>& visited);

struct CSearchResult {
  std::optional<CellIndex> cell;
  CellIndex origin;      ///< cell whose neighbour was returned
  VisitedStack visited;  ///< stack after any backtracking pops
  int pops = 0;
};

using EdgeLookup = std::function<EdgeEstimates(CellIndex)>;

/// Best neighbour of search_cell; pops the stack and recurses from the popped
/// cell while every neighbour is already surveyed. `surveyed` is the set of
/// cells ever surveyed (or otherwise excluded), kept apart from the stack so
/// that popped cells are never offered again.
CSearchResult csearch(const SurveyRegion& region, CellIndex search_cell, VisitedStack visited,
                      const std::set<CellIndex>& surveyed, const EdgeLookup& edges);

/// Incremental driver of the structured-search loop. The controller asks for a
/// proposal, surveys the proposed cell, and commits the result.
class StructuredSelector {
 public:
  struct Proposal {
    CellIndex cell;
    CellIndex origin;
    VisitedStack visited_after;
    bool first = false;
  };

  StructuredSelector(SurveyRegion shape, CellIndex start);

  /// Next cell to survey; cells in `excluded` are treated as already surveyed.
  std::optional<Proposal> propose(const std::set<CellIndex>& excluded = {}) const;
  /// Commits a completed survey of the proposed cell.
  void accept(const Proposal& p, int count, const EdgeEstimates& edges);
  /// Commits the proposal's backtracking without surveying its cell, which is
  /// never proposed again (the goal was dropped).
  void skip(const Proposal& p);
  /// Records a survey completed outside a proposal (e.g. resumed interrupted goal).
  void accept_unproposed(CellIndex cell, int count, const EdgeEstimates& edges);

  const VisitedStack& visited() const { return visited_; }
  const std::set<CellIndex>& surveyed() const { return surveyed_; }
  CellIndex current() const { return current_; }
  int backtracks() const { return backtracks_; }
  bool started() const { return started_; }
  const std::map<CellIndex, EdgeEstimates>& estimates() const { return edges_; }
  const std::map<CellIndex, int>& counts() const { return counts_; }

 private:
  void commit(CellIndex cell, int count, const EdgeEstimates& edges, std::optional<CellIndex> origin);

  SurveyRegion shape_;
  CellIndex start_;
  CellIndex current_;
  bool started_ = false;
  VisitedStack visited_;
  std::set<CellIndex> surveyed_;
  std::map<CellIndex, EdgeEstimates> edges_;
  std::map<CellIndex, int> counts_;
  int backtracks_ = 0;
};

/// Unique tags heard while surveying one cell, split by edge proximity.
class SurveyTally {
 public:
  SurveyTally() = default;
  SurveyTally(Rect cell, double sensor_radius) : cell_(cell), radius_(sensor_radius) {}

  void observe(Vec2 agent_position, std::span<const Detection> detections);
  int unique_count() const { return static_cast<int>(unique_.size()); }
  int dwell() const { return dwell_; }
  bool edge_approached(Direction d) const { return approached_[index(d)]; }
  /// Per-edge unique counts; an edge the agent never came within sensor range
  /// of falls back to `fallback_fraction` of the cell count.
  EdgeEstimates edges(double fallback_fraction = 0.5) const;
  const std::set<int>& tags() const { return unique_; }
  const Rect& cell() const { return cell_; }

 private:
  static std::size_t index(Direction d) { return static_cast<std::size_t>(d); }

  Rect cell_{};
  double radius_ = 2.0;
  int dwell_ = 0;
  std::set<int> unique_;
  std::array<std::set<int>, 4> edge_tags_{};
  std::array<bool, 4> approached_{};
};

/// Distance from p to the boundary segment of `cell` on side d.
double distance_to_edge(const Rect& cell, Direction d, Vec2 p);

/// Boustrophedon sweep of a cell traversed out and back: passes parallel to x,
/// spaced at most one sensor_radius, inset `margin` from the side walls.
/// The pattern is mirrored so its first waypoint is the one nearest `from`.
std::vector<Vec2> lawnmower_path(const Rect& cell, Vec2 from, double sensor_radius = 2.0, double margin = 0.5);
double path_length(std::span<const Vec2> path);
/// Point at arclength s along the polyline (clamped to its ends).
Vec2 point_along(std::span<const Vec2> path, double s);

/// Per-cell unique tags and dwell accumulated from agent positions (used by ES).
class CellCounts {
 public:
  explicit CellCounts(const SurveyRegion& region);
  void observe(Vec2 agent_position, std::span<const Detection> detections);
  int unique_count(CellIndex c) const;
  int dwell(CellIndex c) const;
  const std::vector<int>& dwell_all() const { return dwell_; }

 private:
  SurveyRegion region_;
  std::vector<std::set<int>> unique_;
  std::vector<int> dwell_;
};

struct SurveyRecord {
  CellIndex cell;
  Cycle entry = 0;
  Cycle exit = 0;
  int unique_count = 0;
  EdgeEstimates edges;
  Strategy strategy = Strategy::SS;
  bool partial = false;
  bool hotspot = false;
};

}  // namespace reef
