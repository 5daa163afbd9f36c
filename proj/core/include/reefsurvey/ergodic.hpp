#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "reefsurvey/geometry.hpp"
#include "reefsurvey/rng.hpp"
#include "reefsurvey/sim.hpp"

namespace reef {

/// Multi-index k = (k1, k2) into the cosine basis.
struct BasisIndex {
  int k1 = 0;
  int k2 = 0;
  bool operator==(const BasisIndex&) const = default;
};

/// Fourier basis configuration over a rectangular domain.
///
/// F_k(x) = (1/h_k) cos(k1 pi (x - x0) / L1) cos(k2 pi (y - y0) / L2), with h_k
/// chosen so every F_k has unit L2 norm on the domain, and the metric weights
/// Delta_k = (1 + |k|^2)^(-3/2) for the two-dimensional case.
class ErgodicSpec {
 public:
  ErgodicSpec() : ErgodicSpec(Rect{0.0, 0.0, 20.0, 20.0}) {}
  /// Throws std::invalid_argument for an empty domain, negative K or horizon < 1.
  explicit ErgodicSpec(Rect domain, int max_k = 8, int horizon = 10);

  const Rect& domain() const { return domain_; }
  int max_k() const { return max_k_; }
  int horizon() const { return horizon_; }
  int dimensions() const { return 2; }
  /// Number of retained coefficients, (K + 1)^2.
  int count() const { return (max_k_ + 1) * (max_k_ + 1); }
  int flat(BasisIndex k) const { return k.k1 * (max_k_ + 1) + k.k2; }
  BasisIndex unflat(int i) const { return {i / (max_k_ + 1), i % (max_k_ + 1)}; }

  double norm_factor(BasisIndex k) const { return h_[static_cast<std::size_t>(flat(k))]; }
  double weight(BasisIndex k) const { return delta_[static_cast<std::size_t>(flat(k))]; }
  const std::vector<double>& norm_factors() const { return h_; }
  const std::vector<double>& inverse_norm_factors() const { return inv_h_; }
  const std::vector<double>& weights() const { return delta_; }

 private:
  Rect domain_;
  int max_k_;
  int horizon_;
  std::vector<double> h_;
  std::vector<double> inv_h_;
  std::vector<double> delta_;
};

using Coefficients = std::vector<double>;

/// F_k(x). Throws std::out_of_range if k exceeds K.
double basis_eval(const ErgodicSpec& spec, BasisIndex k, Vec2 x);

/// Every F_k(x) at once, flat-indexed; optionally the gradient components too.
void basis_all(const ErgodicSpec& spec, Vec2 x, std::span<double> values,
               std::span<double> grad_x = {}, std::span<double> grad_y = {});

/// Piecewise-constant spatial density on a res x res grid over `domain`.
/// density() holds cell values in row-major order (row = y index).
class InfoMap {
 public:
  InfoMap() = default;
  static InfoMap uniform(Rect domain, int resolution = 64);
  /// Clips negatives to zero and rescales so the density integrates to one.
  /// Throws std::invalid_argument if everything is zero or sizes mismatch.
  static InfoMap from_unnormalized(Rect domain, int resolution, std::vector<double> values);

  const Rect& domain() const { return domain_; }
  int resolution() const { return resolution_; }
  double cell_width() const { return domain_.width() / resolution_; }
  double cell_height() const { return domain_.height() / resolution_; }
  const std::vector<double>& density() const { return density_; }
  double at(int ix, int iy) const { return density_[static_cast<std::size_t>(iy * resolution_ + ix)]; }
  /// Density of the grid cell containing p (clamped to the domain).
  double value_at(Vec2 p) const;
  double integral() const;
  bool normalized(double tol = 1e-6) const;
  /// Centre of the densest grid cell (lowest index on ties).
  Vec2 argmax() const;

  /// GP posterior fields the density was built from (empty for synthetic maps).
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& variance() const { return variance_; }
  void set_posterior(std::vector<double> mean, std::vector<double> variance);

 private:
  Rect domain_{};
  int resolution_ = 0;
  std::vector<double> density_;
  std::vector<double> mean_;
  std::vector<double> variance_;
};

struct TrajectorySample {
  double t = 0.0;
  Vec2 x;
};

/// Time-ordered path samples.
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws std::invalid_argument unless timestamps are strictly increasing.
  explicit Trajectory(std::vector<TrajectorySample> samples);
  void push_back(TrajectorySample s);
  const std::vector<TrajectorySample>& samples() const { return samples_; }
  bool empty() const { return samples_.empty(); }
  std::size_t size() const { return samples_.size(); }
  double duration() const { return samples_.empty() ? 0.0 : samples_.back().t - samples_.front().t; }

 private:
  std::vector<TrajectorySample> samples_;
};

/// phi_k = integral of phi(x) F_k(x) over the domain. The map is piecewise
/// constant, so each grid cell is integrated in closed form. Throws
/// std::invalid_argument for an unnormalized map or a domain mismatch.
Coefficients phi_coeffs(const ErgodicSpec& spec, const InfoMap& map);

/// c_k = (1/T) * trapezoidal time integral of F_k along the samples. A single
/// sample (or zero duration) is treated as stationary. Throws for an empty trajectory.
Coefficients traj_coeffs(const ErgodicSpec& spec, const Trajectory& traj);

/// sum_k Delta_k (c_k - phi_k)^2.
double ergodic_metric(const ErgodicSpec& spec, const Coefficients& c, const Coefficients& phi);
double ergodic_metric(const ErgodicSpec& spec, const Trajectory& traj, const InfoMap& map);

/// Gaussian-process information map settings.
struct InfoMapConfig {
  double length_scale = 2.0;     ///< squared-exponential kernel length
  double noise = 0.1;            ///< observation noise variance (normalized units)
  double bin_size = 2.0;         ///< ping-rate observation bins
  int window = 17;               ///< cycles per surfacing window
  int ping_period = 17;          ///< used to turn counts into rates
  double kappa = 1.0;            ///< phi proportional to max(0, mu + kappa * sigma)
  int resolution = 64;           ///< quadrature grid of the produced map
  int lattice = 32;              ///< GP evaluation lattice (bilinear to `resolution`)
};

/// Binned ping-rate observation, one per visited bin.
struct RateObservation {
  Vec2 center;
  double rate = 0.0;        ///< estimated tags within range per ping period
  double effective_n = 0.0; ///< dwell, in ping periods (capped per window)
};

/// Aggregates detections and visited positions into per-bin rate observations.
std::vector<RateObservation> bin_ping_rates(std::span<const Detection> detections, const Trajectory& visits,
                                            Rect region, const InfoMapConfig& cfg);

/// Fits a GP (squared-exponential kernel) to binned ping rates and returns
/// phi over `domain`. With no observations the posterior is the prior and phi
/// is uniform. `region` is the full survey area the bins tile.
InfoMap fit_info_map(std::span<const Detection> detections, const Trajectory& visits, Rect region, Rect domain,
                     const InfoMapConfig& cfg = {});

struct ControllerConfig {
  int max_iterations = 50;
  int max_halvings = 12;
  double min_relative_improvement = 1e-6;
};

struct SolveStats {
  int iterations = 0;
  std::vector<double> objective;  ///< value after each accepted iteration (first entry: start)
};

/// Receding-horizon ergodic controller with single-integrator dynamics. Keeps
/// the realised history and the previous horizon solution for warm starts, so
/// one instance belongs to one trial.
class ErgodicController {
 public:
  ErgodicController(ErgodicSpec spec, std::uint64_t seed, ControllerConfig cfg = {});

  /// Replaces phi; history is kept.
  void set_map(const InfoMap& map);
  const Coefficients& phi() const { return phi_; }
  const ErgodicSpec& spec() const { return spec_; }

  /// Appends a realised position to the history used for c_k.
  void record(double t, Vec2 x);
  void reset_history();
  std::size_t history_size() const { return history_count_; }

  /// Optimizes the horizon controls from `position` with |u| <= max_speed and
  /// returns the first one. Never fails: if no step improves, the best-so-far
  /// controls are kept.
  MoveCommand step(Vec2 position, double max_speed);

  const SolveStats& last_stats() const { return stats_; }
  /// Metric of history plus the current horizon plan.
  double planned_metric() const { return last_objective_; }
  /// Metric of the realised history alone.
  double history_metric() const;

 private:
  double objective(Vec2 start, const std::vector<Vec2>& controls, std::vector<Vec2>* grad) const;

  ErgodicSpec spec_;
  ControllerConfig cfg_;
  Rng rng_;
  Coefficients phi_;
  Coefficients hist_integral_;  // trapezoid integral of F_k over history
  double hist_duration_ = 0.0;
  std::size_t history_count_ = 0;
  TrajectorySample last_sample_{};
  std::vector<double> last_basis_;
  std::vector<Vec2> controls_;
  SolveStats stats_;
  double last_objective_ = 0.0;
  mutable std::vector<double> scratch_;
};

}  // namespace reef
