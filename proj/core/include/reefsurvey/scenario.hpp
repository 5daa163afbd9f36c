#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "reefsurvey/geometry.hpp"
#include "reefsurvey/sim.hpp"

namespace reef {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AnomalyConfig {
  double remora_rate = 0.0;     ///< attachment probability per cycle
  int flow_zones = 0;
  int flow_zone_cells = 2;      ///< zones are square, this many cells on a side
  double flow_speed = 0.35;
  Cycle flow_window = 120;
  Cycle flow_start_max = 480;
  int blockades = 0;
};

struct ScenarioConfig {
  std::string name = "single-hotspot";
  double width = 20.0;
  double height = 20.0;
  int rows = 5;
  int cols = 5;
  int tag_budget = 1000;
  int ping_period = 17;
  double sensor_radius = 2.0;
  Cycle deadline = 600;
  double base_speed = 1.0;
  std::vector<Vec2> hotspot_centers{{6.0, 14.0}};
  double hotspot_share = 0.12;
  double cluster_sigma = 1.5;
  double threshold_fraction = 0.2;  ///< where θ sits between the background and hotspot counts
  double min_contrast = 1.2;        ///< required hotspot / background count ratio
  int threshold = 0;                ///< fixed θ; 0 calibrates from the generated field
  AnomalyConfig anomalies;
  std::uint64_t seed = 1;
};

/// Named tag layouts: outer-corners-4, inner-corners-4, inner-5, single-hotspot, empty.
ScenarioConfig named_scenario(const std::string& name);
std::vector<std::string> scenario_names();

/// Parses scenario JSON; missing keys keep their defaults, a `base` key starts
/// from a named layout. Throws ConfigError.
ScenarioConfig scenario_from_json(const std::string& text);
std::string scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig load_scenario(const std::string& path);

/// Tag field, ground truth and threshold for one scenario and experiment seed.
struct ScenarioInstance {
  ScenarioConfig config;
  SurveyRegion region;
  std::vector<FishTag> tags;
  std::vector<int> true_counts;  ///< exhaustive per-cell counts
  int threshold = 1;
  std::vector<bool> truth;       ///< per cell, count >= threshold
};

/// θ = ceil(max_bg + fraction * (min_hot - max_bg)); hot cells are those
/// holding a cluster centre. With no hot cells θ = max + 1.
/// Throws ConfigError when min_hot < min_contrast * max_bg.
int calibrate_threshold(const std::vector<int>& counts, const std::vector<bool>& hot_cells, double fraction,
                        double min_contrast);

/// Deterministic in (config, seed). Throws ConfigError for a centre outside the region.
ScenarioInstance generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Stratified start: index i lands in cell (i mod cells) at a jittered point.
Vec2 start_position(const ScenarioConfig& cfg, std::uint64_t seed, int index);

struct TrialSetup {
  int start_index = 0;
  Vec2 start;
  std::uint64_t seed = 0;
  std::vector<FlowZone> flow_zones;
  std::vector<AnomalyEvent> schedule;  ///< sorted by onset
};

/// Anomaly schedule and start for one trial; identical for every agent given
/// the same (experiment seed, scenario, start index).
TrialSetup make_trial(const ScenarioInstance& inst, std::uint64_t experiment_seed, int start_index);

World build_world(const ScenarioInstance& inst, const TrialSetup& trial);

}  // namespace reef
