#include "reefsurvey/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "reefsurvey/rng.hpp"

namespace reef {

using nlohmann::json;

ScenarioConfig named_scenario(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  if (name == "single-hotspot") {
    c.hotspot_centers = {{6.0, 14.0}};
  } else if (name == "outer-corners-4") {
    c.hotspot_centers = {{2.0, 2.0}, {18.0, 2.0}, {2.0, 18.0}, {18.0, 18.0}};
  } else if (name == "inner-corners-4") {
    c.hotspot_centers = {{6.0, 6.0}, {14.0, 6.0}, {6.0, 14.0}, {14.0, 14.0}};
  } else if (name == "inner-5") {
    c.hotspot_centers = {{6.0, 6.0}, {14.0, 6.0}, {6.0, 14.0}, {14.0, 14.0}, {10.0, 10.0}};
  } else if (name == "empty") {
    c.hotspot_centers = {};
  } else {
    throw ConfigError("unknown scenario: " + name);
  }
  return c;
}

std::vector<std::string> scenario_names() {
  return {"outer-corners-4", "inner-corners-4", "inner-5", "single-hotspot", "empty"};
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

ScenarioConfig scenario_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
  try {
    ScenarioConfig c = j.contains("base") ? named_scenario(j.at("base").get<std::string>()) : ScenarioConfig{};
    take(j, "name", c.name);
    take(j, "width", c.width);
    take(j, "height", c.height);
    take(j, "rows", c.rows);
    take(j, "cols", c.cols);
    take(j, "tag_budget", c.tag_budget);
    take(j, "ping_period", c.ping_period);
    take(j, "sensor_radius", c.sensor_radius);
    take(j, "deadline", c.deadline);
    take(j, "base_speed", c.base_speed);
    take(j, "hotspot_share", c.hotspot_share);
    take(j, "cluster_sigma", c.cluster_sigma);
    take(j, "threshold_fraction", c.threshold_fraction);
    take(j, "threshold", c.threshold);
    take(j, "min_contrast", c.min_contrast);
    take(j, "seed", c.seed);
    if (j.contains("hotspot_centers")) {
      c.hotspot_centers.clear();
      for (const auto& p : j.at("hotspot_centers")) {
        if (!p.is_array() || p.size() != 2) throw ConfigError("hotspot centre must be [x, y]");
        c.hotspot_centers.push_back({p[0].get<double>(), p[1].get<double>()});
      }
    }
    if (j.contains("anomalies")) {
      const json& a = j.at("anomalies");
      take(a, "remora_rate", c.anomalies.remora_rate);
      take(a, "flow_zones", c.anomalies.flow_zones);
      take(a, "flow_zone_cells", c.anomalies.flow_zone_cells);
      take(a, "flow_speed", c.anomalies.flow_speed);
      take(a, "flow_window", c.anomalies.flow_window);
      take(a, "flow_start_max", c.anomalies.flow_start_max);
      take(a, "blockades", c.anomalies.blockades);
    }
    if (c.rows <= 0 || c.cols <= 0 || c.width <= 0.0 || c.height <= 0.0) throw ConfigError("region must be non-empty");
    if (c.tag_budget < 0 || c.ping_period <= 0 || c.deadline < 0 || c.base_speed <= 0.0)
      throw ConfigError("tag_budget, ping_period, deadline and base_speed must be positive");
    if (c.threshold < 0) throw ConfigError("threshold must be non-negative");
    if (c.anomalies.flow_zones > 0 && c.anomalies.flow_window <= 0) throw ConfigError("flow_window must be positive");
    if (c.anomalies.remora_rate < 0.0 || c.anomalies.remora_rate > 1.0) throw ConfigError("remora_rate must lie in [0, 1]");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad scenario field: ") + e.what());
  }
}

std::string scenario_to_json(const ScenarioConfig& c) {
  json centers = json::array();
  for (const auto& p : c.hotspot_centers) centers.push_back({p.x, p.y});
  const json j = {
      {"name", c.name},
      {"width", c.width},
      {"height", c.height},
      {"rows", c.rows},
      {"cols", c.cols},
      {"tag_budget", c.tag_budget},
      {"ping_period", c.ping_period},
      {"sensor_radius", c.sensor_radius},
      {"deadline", c.deadline},
      {"base_speed", c.base_speed},
      {"hotspot_centers", centers},
      {"hotspot_share", c.hotspot_share},
      {"cluster_sigma", c.cluster_sigma},
      {"threshold_fraction", c.threshold_fraction},
      {"threshold", c.threshold},
      {"min_contrast", c.min_contrast},
      {"seed", c.seed},
      {"anomalies",
       {{"remora_rate", c.anomalies.remora_rate},
        {"flow_zones", c.anomalies.flow_zones},
        {"flow_zone_cells", c.anomalies.flow_zone_cells},
        {"flow_speed", c.anomalies.flow_speed},
        {"flow_window", c.anomalies.flow_window},
        {"flow_start_max", c.anomalies.flow_start_max},
        {"blockades", c.anomalies.blockades}}},
  };
  return j.dump(2);
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return scenario_from_json(ss.str());
}

int calibrate_threshold(const std::vector<int>& counts, const std::vector<bool>& hot_cells, double fraction,
                        double min_contrast) {
  int max_bg = 0;
  int min_hot = -1;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (hot_cells[i]) min_hot = min_hot < 0 ? counts[i] : std::min(min_hot, counts[i]);
    else max_bg = std::max(max_bg, counts[i]);
  }
  if (min_hot < 0) return max_bg + 1;
  if (static_cast<double>(min_hot) < min_contrast * static_cast<double>(max_bg))
    throw ConfigError("hotspot cells are not separable from the background");
  return std::max(1, static_cast<int>(std::ceil(max_bg + fraction * (min_hot - max_bg))));
}

ScenarioInstance generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  ScenarioInstance inst{cfg, SurveyRegion(cfg.width, cfg.height, cfg.rows, cfg.cols), {}, {}, 1, {}};
  const Rect bounds = inst.region.bounds();
  for (const auto& c : cfg.hotspot_centers)
    if (!bounds.contains(c)) throw ConfigError("hotspot centre outside the region");
  const int per_cluster = static_cast<int>(std::lround(cfg.hotspot_share * cfg.tag_budget));
  if (per_cluster * static_cast<int>(cfg.hotspot_centers.size()) > cfg.tag_budget)
    throw ConfigError("hotspot clusters exceed the tag budget");

  Rng rng(derive_seed(seed, {hash_name(cfg.name), 0x7A65ULL}));
  int id = 0;
  const auto add = [&](Vec2 p) {
    inst.tags.push_back({id++, p, cfg.ping_period, static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.ping_period)))});
  };
  if (cfg.tag_budget > 0) {
    for (const auto& c : cfg.hotspot_centers) {
      for (int i = 0; i < per_cluster; ++i) {
        Vec2 p;
        do {
          p = {rng.normal(c.x, cfg.cluster_sigma), rng.normal(c.y, cfg.cluster_sigma)};
        } while (!bounds.contains(p));
        add(p);
      }
    }
    while (id < cfg.tag_budget) add({rng.uniform(bounds.x0, bounds.x1), rng.uniform(bounds.y0, bounds.y1)});
  }

  inst.true_counts = count_tags_per_cell(inst.region, inst.tags);
  std::vector<bool> hot(static_cast<std::size_t>(inst.region.cell_count()), false);
  if (cfg.tag_budget > 0)
    for (const auto& c : cfg.hotspot_centers)
      hot[static_cast<std::size_t>(inst.region.linear_index(inst.region.cell_of(c)))] = true;
  inst.threshold = cfg.threshold > 0
                       ? cfg.threshold
                       : calibrate_threshold(inst.true_counts, hot, cfg.threshold_fraction, cfg.min_contrast);
  inst.truth.resize(inst.true_counts.size());
  for (std::size_t i = 0; i < inst.truth.size(); ++i)
    inst.truth[i] = classify_cell(inst.true_counts[i], inst.threshold) == CellClass::Hotspot;
  return inst;
}

Vec2 start_position(const ScenarioConfig& cfg, std::uint64_t seed, int index) {
  const SurveyRegion region(cfg.width, cfg.height, cfg.rows, cfg.cols);
  const CellIndex cell = region.from_linear(index % region.cell_count());
  Rng rng(derive_seed(seed, {hash_name(cfg.name), 0x57A27ULL, static_cast<std::uint64_t>(index)}));
  const Rect r = region.cell_bounds(cell);
  // stay clear of the far boundary so the start belongs to this cell
  const double e = 1e-6;
  return {rng.uniform(r.x0, r.x1 - e), rng.uniform(r.y0, r.y1 - e)};
}

TrialSetup make_trial(const ScenarioInstance& inst, std::uint64_t experiment_seed, int start_index) {
  const ScenarioConfig& cfg = inst.config;
  TrialSetup t;
  t.start_index = start_index;
  t.start = start_position(cfg, experiment_seed, start_index);
  t.seed = derive_seed(experiment_seed, {hash_name(cfg.name), static_cast<std::uint64_t>(start_index)});
  Rng rng(derive_seed(t.seed, {0xA0A1ULL}));
  const AnomalyConfig& a = cfg.anomalies;

  for (Cycle c = 0; c < cfg.deadline; ++c)
    if (a.remora_rate > 0.0 && rng.bernoulli(a.remora_rate)) t.schedule.push_back(AnomalyEvent::remora(c));

  const SurveyRegion& region = inst.region;
  const int span = std::clamp(a.flow_zone_cells, 1, std::min(region.rows(), region.cols()));
  for (int z = 0; z < a.flow_zones; ++z) {
    const int r0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(region.rows() - span + 1)));
    const int c0 = static_cast<int>(rng.below(static_cast<std::uint64_t>(region.cols() - span + 1)));
    const Rect lo = region.cell_bounds({r0, c0});
    const Rect hi = region.cell_bounds({r0 + span - 1, c0 + span - 1});
    const double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Cycle start = static_cast<Cycle>(rng.below(static_cast<std::uint64_t>(std::max<Cycle>(a.flow_start_max, 0) + 1)));
    FlowZone fz{z, {lo.x0, lo.y0, hi.x1, hi.y1}, {a.flow_speed * std::cos(heading), a.flow_speed * std::sin(heading)},
                start, start + a.flow_window};
    t.flow_zones.push_back(fz);
    t.schedule.push_back(AnomalyEvent::flow(start, z));
  }

  auto edges = region.interior_edges();
  for (int b = 0; b < a.blockades && !edges.empty(); ++b) {
    const auto i = static_cast<std::size_t>(rng.below(edges.size()));
    const Cycle onset = static_cast<Cycle>(rng.below(static_cast<std::uint64_t>(std::max<Cycle>(cfg.deadline, 1))));
    t.schedule.push_back(AnomalyEvent::blockade(onset, edges[i]));
    edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(i));
  }
  std::stable_sort(t.schedule.begin(), t.schedule.end(),
                   [](const AnomalyEvent& x, const AnomalyEvent& y) { return x.onset < y.onset; });
  return t;
}

World build_world(const ScenarioInstance& inst, const TrialSetup& trial) {
  SurveyRegion region = inst.region;
  for (const auto& z : trial.flow_zones) region.add_flow_zone(z);
  AgentState agent;
  agent.position = trial.start;
  agent.base_speed = inst.config.base_speed;
  agent.deadline = inst.config.deadline;
  return World(std::move(region), inst.tags, agent, inst.config.sensor_radius);
}

}  // namespace reef
