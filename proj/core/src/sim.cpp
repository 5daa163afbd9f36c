#include "reefsurvey/sim.hpp"

#include <cmath>
#include <sstream>

namespace reef {

std::string to_string(CellIndex c) {
  std::ostringstream os;
  os << "c_" << c.row << "_" << c.col;
  return os.str();
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::North: return "N";
    case Direction::South: return "S";
    case Direction::East: return "E";
    case Direction::West: return "W";
  }
  return "?";
}

std::string to_string(const CellEdge& e) { return "e_" + to_string(e.a).substr(2) + "__" + to_string(e.b).substr(2); }

const char* to_string(AnomalyKind k) {
  switch (k) {
    case AnomalyKind::Remora: return "remora";
    case AnomalyKind::Blockade: return "blockade";
    case AnomalyKind::Flow: return "flow";
  }
  return "?";
}

SurveyRegion::SurveyRegion(double width, double height, int rows, int cols)
    : width_(width), height_(height), rows_(rows), cols_(cols), cell_edge_(0.0) {
  if (rows <= 0 || cols <= 0 || !(width > 0.0) || !(height > 0.0)) {
    throw std::invalid_argument("survey region needs positive dimensions and cell counts");
  }
  const double ex = width / cols;
  const double ey = height / rows;
  if (std::abs(ex - ey) > 1e-12 * std::max(ex, ey)) {
    throw std::invalid_argument("cells must be square: width/cols must equal height/rows");
  }
  cell_edge_ = ex;
}

CellIndex SurveyRegion::cell_of(Vec2 p) const {
  int col = static_cast<int>(std::floor(p.x / cell_edge_));
  int row = static_cast<int>(std::floor(p.y / cell_edge_));
  col = std::clamp(col, 0, cols_ - 1);
  row = std::clamp(row, 0, rows_ - 1);
  return {row, col};
}

Rect SurveyRegion::cell_bounds(CellIndex c) const {
  return {c.col * cell_edge_, c.row * cell_edge_, (c.col + 1) * cell_edge_, (c.row + 1) * cell_edge_};
}

std::vector<CellIndex> SurveyRegion::cells() const {
  std::vector<CellIndex> out;
  out.reserve(static_cast<std::size_t>(cell_count()));
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) out.push_back({r, c});
  return out;
}

std::optional<CellIndex> SurveyRegion::neighbor(CellIndex c, Direction d) const {
  CellIndex n = c;
  switch (d) {
    case Direction::North: ++n.row; break;
    case Direction::South: --n.row; break;
    case Direction::East: ++n.col; break;
    case Direction::West: --n.col; break;
  }
  if (!in_bounds(n)) return std::nullopt;
  return n;
}

bool SurveyRegion::adjacent(CellIndex a, CellIndex b) {
  return std::abs(a.row - b.row) + std::abs(a.col - b.col) == 1;
}

bool SurveyRegion::is_corner(CellIndex c) const {
  return (c.row == 0 || c.row == rows_ - 1) && (c.col == 0 || c.col == cols_ - 1);
}

bool SurveyRegion::is_center(CellIndex c) const {
  return rows_ % 2 == 1 && cols_ % 2 == 1 && c.row == rows_ / 2 && c.col == cols_ / 2;
}

bool SurveyRegion::block(const CellEdge& e) {
  if (!in_bounds(e.a) || !in_bounds(e.b) || !adjacent(e.a, e.b)) {
    throw std::invalid_argument("blocked edge must join two adjacent in-bounds cells");
  }
  return blocked_edges_.insert(CellEdge::between(e.a, e.b)).second;
}

std::vector<CellEdge> SurveyRegion::interior_edges() const {
  std::vector<CellEdge> out;
  for (const auto& c : cells()) {
    if (auto n = neighbor(c, Direction::North)) out.push_back(CellEdge::between(c, *n));
    if (auto e = neighbor(c, Direction::East)) out.push_back(CellEdge::between(c, *e));
  }
  return out;
}

void SurveyRegion::add_flow_zone(const FlowZone& z) {
  if (!bounds().contains(z.bounds) || z.bounds.width() <= 0.0 || z.bounds.height() <= 0.0) {
    throw std::invalid_argument("flow zone must be a non-empty rectangle inside the region");
  }
  if (z.t_end <= z.t_start) throw std::invalid_argument("flow zone window must satisfy t_start < t_end");
  for (const auto& f : flow_zones_)
    if (f.id == z.id) throw std::invalid_argument("duplicate flow zone id");
  flow_zones_.push_back(z);
}

double AgentState::effective_speed() const { return std::ldexp(base_speed, -remora_count); }

World::World(SurveyRegion region, std::vector<FishTag> tags, AgentState agent, double sensor_radius)
    : region_(std::move(region)), tags_(std::move(tags)), agent_(std::move(agent)), sensor_radius_(sensor_radius) {
  for (const auto& t : tags_) {
    if (!region_.bounds().contains(t.position)) throw std::invalid_argument("fish tag outside region");
    if (t.period <= 0 || t.phase < 0) throw std::invalid_argument("bad tag period/phase");
  }
  agent_.position = region_.bounds().clamp(agent_.position);
  rebuild_ping_index();
}

void World::rebuild_ping_index() {
  ping_index_.clear();
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    const auto& t = tags_[i];
    if (ping_index_.size() <= static_cast<std::size_t>(t.period)) ping_index_.resize(static_cast<std::size_t>(t.period) + 1);
    auto& by_phase = ping_index_[static_cast<std::size_t>(t.period)];
    if (by_phase.empty()) by_phase.resize(static_cast<std::size_t>(t.period));
    by_phase[static_cast<std::size_t>(t.phase % t.period)].push_back(static_cast<int>(i));
  }
}

bool World::flow_active(const FlowZone& z) const {
  return activated_zones_.contains(z.id) && agent_.clock >= z.t_start && agent_.clock < z.t_end;
}

std::optional<CellEdge> World::first_blocked_crossing(Vec2 from, Vec2 to) const {
  const CellIndex c0 = region_.cell_of(from);
  const CellIndex c1 = region_.cell_of(to);
  if (c0 == c1) return std::nullopt;
  auto check = [&](CellIndex a, CellIndex b) -> std::optional<CellEdge> {
    if (region_.is_blocked(a, b)) return CellEdge::between(a, b);
    return std::nullopt;
  };
  if (c0.row == c1.row || c0.col == c1.col) {
    // A single command is shorter than a cell edge, so straight moves cross one boundary.
    if (SurveyRegion::adjacent(c0, c1)) return check(c0, c1);
  }
  // Diagonal: the segment passes through one of the two side cells. When the
  // crossing point is exactly a grid corner, both routes count.
  const double edge = region_.cell_edge();
  const Vec2 d = to - from;
  const double bx = (c1.col > c0.col ? c1.col : c0.col) * edge;
  const double by = (c1.row > c0.row ? c1.row : c0.row) * edge;
  const double tx = d.x != 0.0 ? (bx - from.x) / d.x : 2.0;
  const double ty = d.y != 0.0 ? (by - from.y) / d.y : 2.0;
  const CellIndex via_x{c0.row, c1.col};
  const CellIndex via_y{c1.row, c0.col};
  std::optional<CellEdge> hit;
  auto route = [&](CellIndex mid) -> std::optional<CellEdge> {
    if (auto e = check(c0, mid)) return e;
    return check(mid, c1);
  };
  if (tx < ty) {
    hit = route(via_x);
  } else if (ty < tx) {
    hit = route(via_y);
  } else {
    hit = route(via_x);
    if (!hit) hit = route(via_y);
  }
  return hit;
}

StepOutcome World::step(const MoveCommand& command) {
  if (agent_.clock >= agent_.deadline) throw std::logic_error("World::step called at or past the deadline");
  StepOutcome out;
  const Vec2 start = agent_.position;
  const Rect bounds = region_.bounds();

  Vec2 intended = clip_length(command.velocity, agent_.effective_speed());
  Vec2 pos = bounds.clamp(start + intended);
  if (auto e = first_blocked_crossing(start, pos)) {
    out.blocked = BlockedMove{agent_.clock, *e, start};
    blocked_moves_.push_back(*out.blocked);
    pos = start;
  }

  Vec2 drift;
  for (const auto& z : region_.flow_zones())
    if (flow_active(z) && z.bounds.contains(pos)) drift += z.velocity;
  if (drift.squared_norm() > 0.0) {
    const Vec2 drifted = bounds.clamp(pos + drift);
    if (!first_blocked_crossing(pos, drifted)) pos = drifted;
  }

  agent_.position = pos;
  out.displacement = pos - start;
  ++agent_.clock;
  out.detections = sense();
  agent_.heard.insert(agent_.heard.end(), out.detections.begin(), out.detections.end());
  return out;
}

std::vector<Detection> World::sense() const {
  std::vector<Detection> out;
  const double r2 = sensor_radius_ * sensor_radius_;
  const Cycle t = agent_.clock;
  for (std::size_t period = 1; period < ping_index_.size(); ++period) {
    const auto& by_phase = ping_index_[period];
    if (by_phase.empty()) continue;
    const auto phase = static_cast<std::size_t>(((t % static_cast<Cycle>(period)) + static_cast<Cycle>(period)) %
                                                static_cast<Cycle>(period));
    for (int idx : by_phase[phase]) {
      const auto& tag = tags_[static_cast<std::size_t>(idx)];
      if ((tag.position - agent_.position).squared_norm() <= r2) out.push_back({tag.id, t, agent_.position});
    }
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) { return a.tag_id < b.tag_id; });
  return out;
}

void World::inject(const AnomalyEvent& event) {
  if (event.onset != agent_.clock) throw std::invalid_argument("anomaly onset must equal the current clock");
  switch (event.kind) {
    case AnomalyKind::Remora:
      ++agent_.remora_count;
      break;
    case AnomalyKind::Blockade:
      region_.block(event.edge);
      break;
    case AnomalyKind::Flow: {
      bool found = false;
      for (const auto& z : region_.flow_zones()) found = found || z.id == event.zone_id;
      if (!found) throw std::invalid_argument("flow event names an unknown zone");
      activated_zones_.insert(event.zone_id);
      break;
    }
  }
}

CellClass classify_cell(int unique_tag_count, int threshold) {
  if (threshold <= 0) throw std::invalid_argument("hotspot threshold must be positive");
  return unique_tag_count >= threshold ? CellClass::Hotspot : CellClass::NotHotspot;
}

std::vector<int> count_tags_per_cell(const SurveyRegion& region, const std::vector<FishTag>& tags) {
  std::vector<int> counts(static_cast<std::size_t>(region.cell_count()), 0);
  for (const auto& t : tags) ++counts[static_cast<std::size_t>(region.linear_index(region.cell_of(t.position)))];
  return counts;
}

}  // namespace reef
