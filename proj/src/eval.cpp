#include "mpnav/eval.hpp"

#include "mpnav/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mpnav::eval {

namespace {

const scene::Pose& nearest(std::span<const scene::Pose> truth, double t) {
  if (truth.empty()) throw std::invalid_argument("empty truth trajectory");
  auto it = std::lower_bound(truth.begin(), truth.end(), t,
                             [](const scene::Pose& p, double v) { return p.t < v; });
  if (it == truth.end()) {
    --it;
  } else if (it != truth.begin() && (t - std::prev(it)->t) <= (it->t - t)) {
    --it;
  }
  if (std::abs(it->t - t) > kAlignTolerance) {
    throw std::invalid_argument("no truth sample within alignment tolerance");
  }
  return *it;
}

}  // namespace

double rmse_3d(std::span<const TimedPoint> est, std::span<const scene::Pose> truth,
               double t_start, double t_end) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const TimedPoint& e : est) {
    if (e.t < t_start || e.t > t_end) continue;
    sum += (e.p - nearest(truth, e.t).p).squaredNorm();
    ++n;
  }
  if (n == 0) throw std::invalid_argument("rmse_3d: no estimates in window");
  return std::sqrt(sum / static_cast<double>(n));
}

double max_error_pct(std::span<const TimedPoint> est, std::span<const scene::Pose> truth,
                     double t_start, double t_end) {
  const double distance = scene::arc_length(truth, t_start, t_end);
  if (!(distance > 0.0)) throw std::domain_error("max_error_pct: zero distance travelled");
  double worst = 0.0;
  for (const TimedPoint& e : est) {
    if (e.t < t_start || e.t > t_end) continue;
    worst = std::max(worst, (e.p - nearest(truth, e.t).p).norm());
  }
  return 100.0 * worst / distance;
}

std::vector<CdfPoint> error_cdf(std::vector<double> errors) {
  std::sort(errors.begin(), errors.end());
  std::vector<CdfPoint> cdf;
  const double n = static_cast<double>(errors.size());
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i + 1 < errors.size() && errors[i + 1] == errors[i]) continue;
    cdf.push_back({errors[i], static_cast<double>(i + 1) / n});
  }
  return cdf;
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty set");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace mpnav::eval
