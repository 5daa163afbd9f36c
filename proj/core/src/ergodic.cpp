#include "reefsurvey/ergodic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace reef {

namespace {

constexpr double kPi = std::numbers::pi;

double half_or_one(int k) { return k == 0 ? 1.0 : 0.5; }

// Integral of cos(k pi u / L) over [a, b], u measured from the domain origin.
double cos_integral(int k, double a, double b, double length) {
  if (k == 0) return b - a;
  const double w = k * kPi / length;
  return (std::sin(w * b) - std::sin(w * a)) / w;
}

}  // namespace

ErgodicSpec::ErgodicSpec(Rect domain, int max_k, int horizon) : domain_(domain), max_k_(max_k), horizon_(horizon) {
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) throw std::invalid_argument("ergodic domain must be non-empty");
  if (max_k < 0) throw std::invalid_argument("K must be non-negative");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least one cycle");
  const auto n = static_cast<std::size_t>(count());
  h_.resize(n);
  inv_h_.resize(n);
  delta_.resize(n);
  for (int i = 0; i < count(); ++i) {
    const BasisIndex k = unflat(i);
    h_[static_cast<std::size_t>(i)] = std::sqrt(domain.width() * domain.height() * half_or_one(k.k1) * half_or_one(k.k2));
    inv_h_[static_cast<std::size_t>(i)] = 1.0 / h_[static_cast<std::size_t>(i)];
    const double k2 = static_cast<double>(k.k1) * k.k1 + static_cast<double>(k.k2) * k.k2;
    delta_[static_cast<std::size_t>(i)] = std::pow(1.0 + k2, -1.5);
  }
}

double basis_eval(const ErgodicSpec& spec, BasisIndex k, Vec2 x) {
  if (k.k1 < 0 || k.k2 < 0 || k.k1 > spec.max_k() || k.k2 > spec.max_k()) throw std::out_of_range("basis index exceeds K");
  const Rect& d = spec.domain();
  return std::cos(k.k1 * kPi * (x.x - d.x0) / d.width()) * std::cos(k.k2 * kPi * (x.y - d.y0) / d.height()) /
         spec.norm_factor(k);
}

void basis_all(const ErgodicSpec& spec, Vec2 x, std::span<double> values, std::span<double> grad_x,
               std::span<double> grad_y) {
  const int K = spec.max_k();
  const Rect& d = spec.domain();
  const double wx = kPi / d.width();
  const double wy = kPi / d.height();
  const auto n1 = static_cast<std::size_t>(K + 1);
  thread_local std::vector<double> buf;
  buf.resize(4 * n1);
  double* cx = buf.data();
  double* sx = cx + n1;
  double* cy = sx + n1;
  double* sy = cy + n1;
  // cos/sin of k*a by angle addition from the k = 1 values
  const double ax = wx * (x.x - d.x0);
  const double ay = wy * (x.y - d.y0);
  const double c1x = std::cos(ax), s1x = std::sin(ax), c1y = std::cos(ay), s1y = std::sin(ay);
  cx[0] = cy[0] = 1.0;
  sx[0] = sy[0] = 0.0;
  for (std::size_t k = 1; k < n1; ++k) {
    cx[k] = cx[k - 1] * c1x - sx[k - 1] * s1x;
    sx[k] = sx[k - 1] * c1x + cx[k - 1] * s1x;
    cy[k] = cy[k - 1] * c1y - sy[k - 1] * s1y;
    sy[k] = sy[k - 1] * c1y + cy[k - 1] * s1y;
  }
  const double* inv_h = spec.inverse_norm_factors().data();
  const bool want_grad = !grad_x.empty() && !grad_y.empty();
  std::size_t i = 0;
  for (std::size_t a = 0; a < n1; ++a) {
    const double fx = cx[a];
    if (!want_grad) {
      for (std::size_t b = 0; b < n1; ++b, ++i) values[i] = fx * cy[b] * inv_h[i];
      continue;
    }
    const double dfx = -static_cast<double>(a) * wx * sx[a];
    for (std::size_t b = 0; b < n1; ++b, ++i) {
      values[i] = fx * cy[b] * inv_h[i];
      grad_x[i] = dfx * cy[b] * inv_h[i];
      grad_y[i] = -static_cast<double>(b) * wy * fx * sy[b] * inv_h[i];
    }
  }
}

Coefficients phi_coeffs(const ErgodicSpec& spec, const InfoMap& map) {
  if (!map.normalized()) throw std::invalid_argument("information map is not normalized");
  const Rect& d = spec.domain();
  const Rect& m = map.domain();
  const double tol = 1e-9 * std::max(d.width(), d.height());
  if (std::abs(d.x0 - m.x0) > tol || std::abs(d.y0 - m.y0) > tol || std::abs(d.x1 - m.x1) > tol ||
      std::abs(d.y1 - m.y1) > tol) {
    throw std::invalid_argument("information map domain differs from the basis domain");
  }
  const int K = spec.max_k();
  const int res = map.resolution();
  const double dx = d.width() / res;
  const double dy = d.height() / res;
  std::vector<double> ix(static_cast<std::size_t>((K + 1) * res));
  std::vector<double> iy(ix.size());
  for (int k = 0; k <= K; ++k) {
    for (int c = 0; c < res; ++c) {
      ix[static_cast<std::size_t>(k * res + c)] = cos_integral(k, c * dx, (c + 1) * dx, d.width());
      iy[static_cast<std::size_t>(k * res + c)] = cos_integral(k, c * dy, (c + 1) * dy, d.height());
    }
  }
  // t[k1][row] = sum over columns of Ix(k1, col) * rho(row, col)
  const auto& rho = map.density();
  std::vector<double> t(static_cast<std::size_t>((K + 1) * res), 0.0);
  for (int k1 = 0; k1 <= K; ++k1) {
    for (int row = 0; row < res; ++row) {
      double acc = 0.0;
      for (int col = 0; col < res; ++col)
        acc += ix[static_cast<std::size_t>(k1 * res + col)] * rho[static_cast<std::size_t>(row * res + col)];
      t[static_cast<std::size_t>(k1 * res + row)] = acc;
    }
  }
  Coefficients out(static_cast<std::size_t>(spec.count()));
  for (int k1 = 0; k1 <= K; ++k1) {
    for (int k2 = 0; k2 <= K; ++k2) {
      double acc = 0.0;
      for (int row = 0; row < res; ++row)
        acc += t[static_cast<std::size_t>(k1 * res + row)] * iy[static_cast<std::size_t>(k2 * res + row)];
      const int i = spec.flat({k1, k2});
      out[static_cast<std::size_t>(i)] = acc / spec.norm_factors()[static_cast<std::size_t>(i)];
    }
  }
  return out;
}

Coefficients traj_coeffs(const ErgodicSpec& spec, const Trajectory& traj) {
  if (traj.empty()) throw std::invalid_argument("trajectory is empty");
  const auto n = static_cast<std::size_t>(spec.count());
  Coefficients acc(n, 0.0);
  std::vector<double> prev(n), cur(n);
  const auto& s = traj.samples();
  basis_all(spec, s.front().x, prev);
  if (s.size() == 1) return prev;
  for (std::size_t j = 1; j < s.size(); ++j) {
    basis_all(spec, s[j].x, cur);
    const double dt = s[j].t - s[j - 1].t;
    for (std::size_t i = 0; i < n; ++i) acc[i] += 0.5 * dt * (prev[i] + cur[i]);
    std::swap(prev, cur);
  }
  const double T = traj.duration();
  for (auto& v : acc) v /= T;
  return acc;
}

double ergodic_metric(const ErgodicSpec& spec, const Coefficients& c, const Coefficients& phi) {
  const auto n = static_cast<std::size_t>(spec.count());
  if (c.size() != n || phi.size() != n) throw std::invalid_argument("coefficient vectors do not match the basis size");
  double eps = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = c[i] - phi[i];
    eps += spec.weights()[i] * d * d;
  }
  return eps;
}

double ergodic_metric(const ErgodicSpec& spec, const Trajectory& traj, const InfoMap& map) {
  return ergodic_metric(spec, traj_coeffs(spec, traj), phi_coeffs(spec, map));
}

Trajectory::Trajectory(std::vector<TrajectorySample> samples) : samples_(std::move(samples)) {
  for (std::size_t i = 1; i < samples_.size(); ++i)
    if (!(samples_[i].t > samples_[i - 1].t)) throw std::invalid_argument("trajectory timestamps must increase strictly");
}

void Trajectory::push_back(TrajectorySample s) {
  if (!samples_.empty() && !(s.t > samples_.back().t))
    throw std::invalid_argument("trajectory timestamps must increase strictly");
  samples_.push_back(s);
}

ErgodicController::ErgodicController(ErgodicSpec spec, std::uint64_t seed, ControllerConfig cfg)
    : spec_(std::move(spec)), cfg_(cfg), rng_(seed) {
  const auto n = static_cast<std::size_t>(spec_.count());
  phi_.assign(n, 0.0);
  hist_integral_.assign(n, 0.0);
  set_map(InfoMap::uniform(spec_.domain()));
}

void ErgodicController::set_map(const InfoMap& map) { phi_ = phi_coeffs(spec_, map); }

void ErgodicController::record(double t, Vec2 x) {
  const auto n = static_cast<std::size_t>(spec_.count());
  std::vector<double> f(n);
  basis_all(spec_, spec_.domain().clamp(x), f);
  if (history_count_ > 0) {
    const double dt = t - last_sample_.t;
    if (!(dt > 0.0)) throw std::invalid_argument("controller history must advance in time");
    for (std::size_t i = 0; i < n; ++i) hist_integral_[i] += 0.5 * dt * (last_basis_[i] + f[i]);
    hist_duration_ += dt;
  }
  last_sample_ = {t, x};
  last_basis_ = std::move(f);
  ++history_count_;
}

void ErgodicController::reset_history() {
  std::fill(hist_integral_.begin(), hist_integral_.end(), 0.0);
  hist_duration_ = 0.0;
  history_count_ = 0;
  last_basis_.clear();
  controls_.clear();
}

double ErgodicController::history_metric() const {
  if (history_count_ == 0) return ergodic_metric(spec_, Coefficients(phi_.size(), 0.0), phi_);
  if (history_count_ == 1) return ergodic_metric(spec_, last_basis_, phi_);
  Coefficients c = hist_integral_;
  for (auto& v : c) v /= hist_duration_;
  return ergodic_metric(spec_, c, phi_);
}

double ErgodicController::objective(Vec2 start, const std::vector<Vec2>& controls, std::vector<Vec2>* grad) const {
  const auto n = static_cast<std::size_t>(spec_.count());
  const auto H = controls.size();
  const double T = hist_duration_ + static_cast<double>(H);
  // scratch layout: values, grad_x, grad_y for each of the H + 1 plan points
  scratch_.resize(3 * n * (H + 1));
  auto val = [&](std::size_t j) { return std::span<double>(scratch_.data() + 3 * n * j, n); };
  auto gx = [&](std::size_t j) { return std::span<double>(scratch_.data() + 3 * n * j + n, n); };
  auto gy = [&](std::size_t j) { return std::span<double>(scratch_.data() + 3 * n * j + 2 * n, n); };
  const bool g = grad != nullptr;
  Vec2 x = start;
  basis_all(spec_, x, val(0));
  for (std::size_t j = 0; j < H; ++j) {
    x = x + controls[j];
    if (g) basis_all(spec_, x, val(j + 1), gx(j + 1), gy(j + 1));
    else basis_all(spec_, x, val(j + 1));
  }
  std::vector<double> diff(n);
  double eps = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double integral = hist_integral_[i];
    for (std::size_t j = 0; j < H; ++j) integral += 0.5 * (val(j)[i] + val(j + 1)[i]);
    const double c = integral / T;
    diff[i] = c - phi_[i];
    eps += spec_.weights()[i] * diff[i] * diff[i];
  }
  if (grad != nullptr) {
    grad->assign(H, Vec2{});
    // d eps / d x_j, accumulated backwards into d eps / d u_i = sum_{j > i} d eps / d x_j
    Vec2 suffix;
    for (std::size_t j = H; j >= 1; --j) {
      const double w = (j == H ? 0.5 : 1.0) / T;
      Vec2 g;
      for (std::size_t i = 0; i < n; ++i) {
        const double s = 2.0 * spec_.weights()[i] * diff[i] * w;
        g.x += s * gx(j)[i];
        g.y += s * gy(j)[i];
      }
      suffix += g;
      (*grad)[j - 1] = suffix;
    }
  }
  return eps;
}

namespace {

double reflect(double v, double lo, double hi) {
  if (v < lo) v = 2.0 * lo - v;
  if (v > hi) v = 2.0 * hi - v;
  return std::clamp(v, lo, hi);
}

// Keeps every control within the speed limit and every planned point inside the domain.
// Planned points are mirrored at the walls.
void feasible(std::vector<Vec2>& controls, Vec2 start, const Rect& domain, double max_speed) {
  Vec2 x = start;
  for (auto& u : controls) {
    u = clip_length(u, max_speed);
    const Vec2 next{reflect(x.x + u.x, domain.x0, domain.x1), reflect(x.y + u.y, domain.y0, domain.y1)};
    u = next - x;
    x = next;
  }
}

}  // namespace

MoveCommand ErgodicController::step(Vec2 position, double max_speed) {
  const auto H = static_cast<std::size_t>(spec_.horizon());
  const Rect& dom = spec_.domain();
  position = dom.clamp(position);
  stats_ = {};
  if (!(max_speed > 0.0)) {
    last_objective_ = objective(position, std::vector<Vec2>(H), nullptr);
    stats_.objective.push_back(last_objective_);
    return {};
  }
  if (controls_.size() == H) {
    std::rotate(controls_.begin(), controls_.begin() + 1, controls_.end());
    if (H >= 2) controls_.back() = controls_[H - 2];
  } else {
    const double heading = rng_.uniform(0.0, 2.0 * std::numbers::pi);
    controls_.assign(H, Vec2{std::cos(heading), std::sin(heading)} * (0.5 * max_speed));
  }
  feasible(controls_, position, dom, max_speed);

  std::vector<Vec2> grad;
  std::vector<Vec2> trial(H);
  double best = objective(position, controls_, &grad);
  stats_.objective.push_back(best);
  double alpha = max_speed;
  for (int it = 0; it < cfg_.max_iterations; ++it) {
    double gnorm = 0.0;
    for (const auto& g : grad) gnorm += g.squared_norm();
    gnorm = std::sqrt(gnorm);
    if (!(gnorm > 0.0)) break;
    bool accepted = false;
    for (int h = 0; h <= cfg_.max_halvings; ++h) {
      for (std::size_t j = 0; j < H; ++j) trial[j] = controls_[j] - grad[j] * (alpha / gnorm);
      feasible(trial, position, dom, max_speed);
      const double val = objective(position, trial, nullptr);
      if (val < best) {
        const double improvement = (best - val) / std::max(best, 1e-300);
        controls_.swap(trial);
        best = objective(position, controls_, &grad);
        stats_.objective.push_back(best);
        ++stats_.iterations;
        accepted = true;
        alpha = std::min(2.0 * alpha, 2.0 * max_speed * std::sqrt(static_cast<double>(H)));
        if (improvement < cfg_.min_relative_improvement) it = cfg_.max_iterations;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  last_objective_ = best;
  return {controls_.front()};
}

}  // namespace reef
