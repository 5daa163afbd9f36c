#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "reefsurvey/ergodic.hpp"

namespace reef {

InfoMap InfoMap::uniform(Rect domain, int resolution) {
  const auto n = static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution);
  return from_unnormalized(domain, resolution, std::vector<double>(n, 1.0));
}

InfoMap InfoMap::from_unnormalized(Rect domain, int resolution, std::vector<double> values) {
  if (resolution <= 0) throw std::invalid_argument("map resolution must be positive");
  if (!(domain.width() > 0.0) || !(domain.height() > 0.0)) throw std::invalid_argument("map domain must be non-empty");
  if (values.size() != static_cast<std::size_t>(resolution) * static_cast<std::size_t>(resolution))
    throw std::invalid_argument("map values do not match the resolution");
  double total = 0.0;
  for (auto& v : values) {
    if (!(v > 0.0)) v = 0.0;  // also clears NaN
    total += v;
  }
  if (!(total > 0.0)) throw std::invalid_argument("map has no positive mass");
  const double cell_area = domain.area() / (static_cast<double>(resolution) * resolution);
  for (auto& v : values) v /= total * cell_area;
  InfoMap m;
  m.domain_ = domain;
  m.resolution_ = resolution;
  m.density_ = std::move(values);
  return m;
}

double InfoMap::value_at(Vec2 p) const {
  p = domain_.clamp(p);
  const int ix = std::clamp(static_cast<int>((p.x - domain_.x0) / cell_width()), 0, resolution_ - 1);
  const int iy = std::clamp(static_cast<int>((p.y - domain_.y0) / cell_height()), 0, resolution_ - 1);
  return at(ix, iy);
}

double InfoMap::integral() const {
  double s = 0.0;
  for (double v : density_) s += v;
  return s * cell_width() * cell_height();
}

bool InfoMap::normalized(double tol) const {
  if (density_.empty()) return false;
  for (double v : density_)
    if (v < 0.0 || !std::isfinite(v)) return false;
  return std::abs(integral() - 1.0) <= tol;
}

Vec2 InfoMap::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < density_.size(); ++i)
    if (density_[i] > density_[best]) best = i;
  const int ix = static_cast<int>(best) % resolution_;
  const int iy = static_cast<int>(best) / resolution_;
  return {domain_.x0 + (ix + 0.5) * cell_width(), domain_.y0 + (iy + 0.5) * cell_height()};
}

void InfoMap::set_posterior(std::vector<double> mean, std::vector<double> variance) {
  mean_ = std::move(mean);
  variance_ = std::move(variance);
}

std::vector<RateObservation> bin_ping_rates(std::span<const Detection> detections, const Trajectory& visits,
                                            Rect region, const InfoMapConfig& cfg) {
  if (!(cfg.bin_size > 0.0) || cfg.window <= 0 || cfg.ping_period <= 0)
    throw std::invalid_argument("bin size, window and ping period must be positive");
  const int nx = std::max(1, static_cast<int>(std::ceil(region.width() / cfg.bin_size - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(region.height() / cfg.bin_size - 1e-9)));
  auto bin_of = [&](Vec2 p) {
    p = region.clamp(p);
    const int bx = std::clamp(static_cast<int>((p.x - region.x0) / cfg.bin_size), 0, nx - 1);
    const int by = std::clamp(static_cast<int>((p.y - region.y0) / cfg.bin_size), 0, ny - 1);
    return by * nx + bx;
  };
  auto window_of = [&](double t) { return static_cast<long long>(std::floor(t / cfg.window)); };

  // (window, bin) -> dwell samples and distinct tags
  std::map<std::pair<long long, int>, int> dwell;
  std::map<std::pair<long long, int>, std::set<int>> heard;
  for (const auto& s : visits.samples()) ++dwell[{window_of(s.t), bin_of(s.x)}];
  for (const auto& d : detections) heard[{window_of(static_cast<double>(d.time)), bin_of(d.agent_position)}].insert(d.tag_id);

  const double period = cfg.ping_period;
  std::map<int, std::pair<double, double>> per_bin;  // bin -> (sum n*rate, sum n)
  for (const auto& [key, samples] : dwell) {
    const double eff = std::min<double>(samples, period);
    const auto it = heard.find(key);
    const double unique = it == heard.end() ? 0.0 : static_cast<double>(it->second.size());
    const double n = eff / period;
    const double rate = unique * period / eff;
    auto& acc = per_bin[key.second];
    acc.first += n * rate;
    acc.second += n;
  }
  std::vector<RateObservation> out;
  out.reserve(per_bin.size());
  for (const auto& [bin, acc] : per_bin) {
    const int bx = bin % nx;
    const int by = bin / nx;
    const Vec2 c{region.x0 + (bx + 0.5) * cfg.bin_size, region.y0 + (by + 0.5) * cfg.bin_size};
    out.push_back({c, acc.first / acc.second, acc.second});
  }
  return out;
}

namespace {

struct Axis {
  std::vector<int> lo, hi;
  std::vector<double> w;
};

Axis axis_weights(int L, int res) {
  Axis a;
  a.lo.resize(static_cast<std::size_t>(res));
  a.hi.resize(static_cast<std::size_t>(res));
  a.w.resize(static_cast<std::size_t>(res));
  for (int i = 0; i < res; ++i) {
    const double f = std::clamp((i + 0.5) * L / res - 0.5, 0.0, L - 1.0);
    const int i0 = std::min(static_cast<int>(f), L - 1);
    a.lo[static_cast<std::size_t>(i)] = i0;
    a.hi[static_cast<std::size_t>(i)] = std::min(i0 + 1, L - 1);
    a.w[static_cast<std::size_t>(i)] = f - i0;
  }
  return a;
}

std::vector<double> bilinear(const std::vector<double>& lattice, int L, int res, const Axis& ax) {
  std::vector<double> out(static_cast<std::size_t>(res) * static_cast<std::size_t>(res));
  std::vector<double> row(static_cast<std::size_t>(L));
  for (int r = 0; r < res; ++r) {
    const auto ri = static_cast<std::size_t>(r);
    const double wy = ax.w[ri];
    const double* a = &lattice[static_cast<std::size_t>(ax.lo[ri] * L)];
    const double* b = &lattice[static_cast<std::size_t>(ax.hi[ri] * L)];
    for (int x = 0; x < L; ++x) row[static_cast<std::size_t>(x)] = a[x] * (1 - wy) + b[x] * wy;
    double* o = &out[ri * static_cast<std::size_t>(res)];
    for (int c = 0; c < res; ++c) {
      const auto ci = static_cast<std::size_t>(c);
      const double wx = ax.w[ci];
      o[c] = row[static_cast<std::size_t>(ax.lo[ci])] * (1 - wx) + row[static_cast<std::size_t>(ax.hi[ci])] * wx;
    }
  }
  return out;
}

}  // namespace

InfoMap fit_info_map(std::span<const Detection> detections, const Trajectory& visits, Rect region, Rect domain,
                     const InfoMapConfig& cfg) {
  if (cfg.resolution <= 0 || cfg.lattice <= 0) throw std::invalid_argument("map resolution must be positive");
  if (!(cfg.length_scale > 0.0) || !(cfg.noise > 0.0)) throw std::invalid_argument("GP length scale and noise must be positive");
  auto obs = bin_ping_rates(detections, visits, region, cfg);

  // Observations far from the domain have negligible kernel weight.
  const double reach = 3.0 * cfg.length_scale;
  const Rect near{domain.x0 - reach, domain.y0 - reach, domain.x1 + reach, domain.y1 + reach};
  double total_rate = 0.0;
  for (const auto& o : obs) total_rate += o.rate;
  const double mean_rate = obs.empty() ? 0.0 : total_rate / static_cast<double>(obs.size());
  std::erase_if(obs, [&](const RateObservation& o) { return !near.contains(o.center); });

  const int L = cfg.lattice;
  const auto npts = static_cast<std::size_t>(L) * static_cast<std::size_t>(L);
  std::vector<double> mu(npts, 0.0), var(npts, 1.0);
  const auto n = static_cast<Eigen::Index>(obs.size());
  if (n > 0) {
    const double inv2l2 = 1.0 / (2.0 * cfg.length_scale * cfg.length_scale);
    auto kern = [&](Vec2 a, Vec2 b) { return std::exp(-(a - b).squared_norm() * inv2l2); };
    Eigen::VectorXd y(n);
    double prior = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i) = mean_rate > 0.0 ? obs[static_cast<std::size_t>(i)].rate / mean_rate : 0.0;
      prior += y(i);
    }
    prior /= static_cast<double>(n);
    Eigen::MatrixXd K(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j <= i; ++j) {
        K(i, j) = K(j, i) = kern(obs[static_cast<std::size_t>(i)].center, obs[static_cast<std::size_t>(j)].center);
      }
      K(i, i) += cfg.noise / std::max(obs[static_cast<std::size_t>(i)].effective_n, 1e-3);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(K);
    const Eigen::VectorXd alpha = llt.solve((y.array() - prior).matrix());
    Eigen::MatrixXd Ks(n, static_cast<Eigen::Index>(npts));
    const double lx = domain.width() / L;
    const double ly = domain.height() / L;
    for (int r = 0; r < L; ++r) {
      for (int c = 0; c < L; ++c) {
        const Vec2 p{domain.x0 + (c + 0.5) * lx, domain.y0 + (r + 0.5) * ly};
        const auto col = static_cast<Eigen::Index>(r * L + c);
        for (Eigen::Index i = 0; i < n; ++i) Ks(i, col) = kern(obs[static_cast<std::size_t>(i)].center, p);
      }
    }
    const Eigen::VectorXd m = Ks.transpose() * alpha;
    const Eigen::MatrixXd v = llt.matrixL().solve(Ks);
    const Eigen::VectorXd reduction = v.colwise().squaredNorm().transpose();
    for (std::size_t i = 0; i < npts; ++i) {
      mu[i] = prior + m(static_cast<Eigen::Index>(i));
      var[i] = std::max(0.0, 1.0 - reduction(static_cast<Eigen::Index>(i)));
    }
  }
  std::vector<double> score(npts);
  for (std::size_t i = 0; i < npts; ++i) score[i] = std::max(0.0, mu[i] + cfg.kappa * std::sqrt(var[i]));
  bool any = false;
  for (double s : score) any = any || s > 0.0;
  if (!any) std::fill(score.begin(), score.end(), 1.0);

  const Axis ax = axis_weights(L, cfg.resolution);
  InfoMap map = InfoMap::from_unnormalized(domain, cfg.resolution, bilinear(score, L, cfg.resolution, ax));
  map.set_posterior(bilinear(mu, L, cfg.resolution, ax), bilinear(var, L, cfg.resolution, ax));
  return map;
}

}  // namespace reef
