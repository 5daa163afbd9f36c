#include "reefsurvey/search.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reef {

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::SS: return "SS";
    case Strategy::ES: return "ES";
    case Strategy::ESCSS: return "ESCSS";
  }
  return "?";
}

Strategy strategy_from_string(const std::string& s) {
  if (s == "SS") return Strategy::SS;
  if (s == "ES") return Strategy::ES;
  if (s == "ESCSS") return Strategy::ESCSS;
  throw std::invalid_argument("unknown strategy: " + s);
}

double EdgeEstimates::get(Direction d) const {
  switch (d) {
    case Direction::North: return north;
    case Direction::South: return south;
    case Direction::East: return east;
    case Direction::West: return west;
  }
  return 0.0;
}

void EdgeEstimates::set(Direction d, double v) {
  switch (d) {
    case Direction::North: north = v; break;
    case Direction::South: south = v; break;
    case Direction::East: east = v; break;
    case Direction::West: west = v; break;
  }
}

void VisitedStack::push(CellIndex cell, int count) {
  if (contains(cell)) throw std::invalid_argument("cell already on the visited stack: " + to_string(cell));
  entries_.push_back({cell, count});
}

VisitedEntry VisitedStack::pop() {
  if (entries_.empty()) throw std::logic_error("pop from an empty visited stack");
  VisitedEntry e = entries_.back();
  entries_.pop_back();
  return e;
}

bool VisitedStack::contains(CellIndex c) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const VisitedEntry& e) { return e.cell == c; });
}

void VisitedStack::sort_by_max_unique_tags() {
  std::stable_sort(entries_.begin(), entries_.end(), [](const VisitedEntry& a, const VisitedEntry& b) {
    if (a.count != b.count) return a.count < b.count;
    return b.cell < a.cell;
  });
}

std::optional<CellIndex> unvisited_max_cell(const SurveyRegion& region, CellIndex cell, const EdgeEstimates& e,
                                            const std::set<CellIndex>& visited) {
  std::optional<CellIndex> best;
  double best_value = 0.0;
  for (Direction d : kDirections) {
    const auto n = region.neighbor(cell, d);
    if (!n || visited.contains(*n)) continue;
    const double v = e.get(d);
    if (!best || v > best_value) {
      best = n;
      best_value = v;
    }
  }
  return best;
}

CSearchResult csearch(const SurveyRegion& region, CellIndex search_cell, VisitedStack visited,
                      const std::set<CellIndex>& surveyed, const EdgeLookup& edges) {
  CSearchResult r;
  r.origin = search_cell;
  for (;;) {
    r.cell = unvisited_max_cell(region, r.origin, edges(r.origin), surveyed);
    if (r.cell || visited.empty()) break;
    r.origin = visited.pop().cell;
    ++r.pops;
  }
  r.visited = std::move(visited);
  return r;
}

StructuredSelector::StructuredSelector(SurveyRegion shape, CellIndex start)
    : shape_(std::move(shape)), start_(start), current_(start) {
  if (!shape_.in_bounds(start)) throw std::invalid_argument("start cell outside the region");
}

std::optional<StructuredSelector::Proposal> StructuredSelector::propose(const std::set<CellIndex>& excluded) const {
  if (!started_ && !excluded.contains(start_) && !surveyed_.contains(start_)) {
    return Proposal{start_, start_, visited_, true};
  }
  std::set<CellIndex> blocked = surveyed_;
  blocked.insert(excluded.begin(), excluded.end());
  if (!started_) blocked.insert(start_);
  const auto lookup = [this](CellIndex c) {
    const auto it = edges_.find(c);
    return it == edges_.end() ? EdgeEstimates{} : it->second;
  };
  CSearchResult r = csearch(shape_, current_, visited_, blocked, lookup);
  if (!r.cell) return std::nullopt;
  return Proposal{*r.cell, r.origin, std::move(r.visited), false};
}

void StructuredSelector::commit(CellIndex cell, int count, const EdgeEstimates& edges,
                                std::optional<CellIndex> origin) {
  surveyed_.insert(cell);
  edges_[cell] = edges;
  counts_[cell] = count;
  if (!started_) {
    started_ = true;
    visited_.push(cell, count);
    current_ = cell;
    return;
  }
  const CellIndex previous = !visited_.empty() ? visited_.top().cell : origin.value_or(current_);
  const int previous_count = counts_.contains(previous) ? counts_.at(previous) : 0;
  visited_.push(cell, count);
  if (count < previous_count) {
    visited_.sort_by_max_unique_tags();
    current_ = previous;
    ++backtracks_;
  } else {
    current_ = cell;
  }
}

void StructuredSelector::accept(const Proposal& p, int count, const EdgeEstimates& edges) {
  if (!p.first) visited_ = p.visited_after;
  commit(p.cell, count, edges, p.origin);
}

void StructuredSelector::skip(const Proposal& p) {
  if (!p.first) {
    visited_ = p.visited_after;
    current_ = p.origin;
  }
  surveyed_.insert(p.cell);
}

void StructuredSelector::accept_unproposed(CellIndex cell, int count, const EdgeEstimates& edges) {
  if (surveyed_.contains(cell)) return;
  commit(cell, count, edges, std::nullopt);
}

double distance_to_edge(const Rect& cell, Direction d, Vec2 p) {
  Vec2 a;
  Vec2 b;
  switch (d) {
    case Direction::North: a = {cell.x0, cell.y1}; b = {cell.x1, cell.y1}; break;
    case Direction::South: a = {cell.x0, cell.y0}; b = {cell.x1, cell.y0}; break;
    case Direction::East: a = {cell.x1, cell.y0}; b = {cell.x1, cell.y1}; break;
    case Direction::West: a = {cell.x0, cell.y0}; b = {cell.x0, cell.y1}; break;
  }
  const Vec2 ab = b - a;
  const double t = std::clamp((p - a).dot(ab) / ab.squared_norm(), 0.0, 1.0);
  return distance(p, a + ab * t);
}

void SurveyTally::observe(Vec2 agent_position, std::span<const Detection> detections) {
  ++dwell_;
  for (Direction d : kDirections) {
    const bool near = distance_to_edge(cell_, d, agent_position) <= radius_;
    approached_[index(d)] = approached_[index(d)] || near;
    if (near)
      for (const auto& det : detections) edge_tags_[index(d)].insert(det.tag_id);
  }
  for (const auto& det : detections) unique_.insert(det.tag_id);
}

EdgeEstimates SurveyTally::edges(double fallback_fraction) const {
  EdgeEstimates e;
  for (Direction d : kDirections) {
    const double v = approached_[index(d)] ? static_cast<double>(edge_tags_[index(d)].size())
                                           : fallback_fraction * static_cast<double>(unique_.size());
    e.set(d, v);
  }
  return e;
}

std::vector<Vec2> lawnmower_path(const Rect& cell, Vec2 from, double sensor_radius, double margin) {
  const double spacing = sensor_radius;
  const int passes = std::max(1, static_cast<int>(std::ceil(cell.height() / spacing - 1e-9)));
  const double step = cell.height() / passes;
  std::vector<Vec2> out;
  const double xa = cell.x0 + margin;
  const double xb = cell.x1 - margin;
  for (int i = 0; i < passes; ++i) {
    const double y = cell.y0 + (i + 0.5) * step;
    if (i % 2 == 0) {
      out.push_back({xa, y});
      out.push_back({xb, y});
    } else {
      out.push_back({xb, y});
      out.push_back({xa, y});
    }
  }
  // out and back
  for (int i = static_cast<int>(out.size()) - 2; i >= 0; --i) out.push_back(out[static_cast<std::size_t>(i)]);

  // Mirror so the sweep starts at the corner nearest `from`.
  const Vec2 c = cell.center();
  int best_mirror = 0;
  double best_d = 0.0;
  for (int m = 0; m < 4; ++m) {
    Vec2 s = out.front();
    if (m & 1) s.x = 2.0 * c.x - s.x;
    if (m & 2) s.y = 2.0 * c.y - s.y;
    const double d = distance(s, from);
    if (m == 0 || d < best_d - 1e-12) {
      best_d = d;
      best_mirror = m;
    }
  }
  for (auto& p : out) {
    if (best_mirror & 1) p.x = 2.0 * c.x - p.x;
    if (best_mirror & 2) p.y = 2.0 * c.y - p.y;
  }
  return out;
}

double path_length(std::span<const Vec2> path) {
  double s = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) s += distance(path[i - 1], path[i]);
  return s;
}

Vec2 point_along(std::span<const Vec2> path, double s) {
  if (path.empty()) throw std::invalid_argument("empty path");
  if (s <= 0.0) return path.front();
  for (std::size_t i = 1; i < path.size(); ++i) {
    const double seg = distance(path[i - 1], path[i]);
    if (s <= seg) return seg > 0.0 ? path[i - 1] + (path[i] - path[i - 1]) * (s / seg) : path[i];
    s -= seg;
  }
  return path.back();
}

CellCounts::CellCounts(const SurveyRegion& region)
    : region_(region),
      unique_(static_cast<std::size_t>(region.cell_count())),
      dwell_(static_cast<std::size_t>(region.cell_count()), 0) {}

void CellCounts::observe(Vec2 agent_position, std::span<const Detection> detections) {
  const auto i = static_cast<std::size_t>(region_.linear_index(region_.cell_of(agent_position)));
  ++dwell_[i];
  for (const auto& d : detections) unique_[i].insert(d.tag_id);
}

int CellCounts::unique_count(CellIndex c) const {
  return static_cast<int>(unique_[static_cast<std::size_t>(region_.linear_index(c))].size());
}

int CellCounts::dwell(CellIndex c) const { return dwell_[static_cast<std::size_t>(region_.linear_index(c))]; }

}  // namespace reef
