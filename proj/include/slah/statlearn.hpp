#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "slah/error.hpp"

namespace slah {

/// Logistic function 1 / (1 + e^-z), evaluated without overflow.
inline double f_log(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// One (RRM parameter, KPI) observation.
struct Sample {
  double x = 0.0;
  double y = 0.0;
};

/// y(x) = y_lo + (y_hi - y_lo) * f_log(beta0 + beta1 * x)
struct KpiModel {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
  std::size_t n_samples = 0;
  double residual_rms = 0.0;

  double predict(double x) const { return y_lo + (y_hi - y_lo) * f_log(beta0 + beta1 * x); }

  double normalize(double y) const { return (y - y_lo) / (y_hi - y_lo); }
};

struct FitOptions {
  double margin_fraction = 0.10;
  double min_margin = 1e-6;
  double flat_range = 1e-9;
  double init_clamp = 0.02;
  double gradient_tol = 1e-10;
  int max_iterations = 200;
  int grid_points = 81;      // coarse multi-start grid per axis
  int grid_starts = 8;       // refinements started from the best grid points
  double grid_beta0 = 50.0;  // grid spans [-grid_beta0, grid_beta0]
  double grid_beta1 = 100.0;
};

/// Least-squares loss on the normalized scale, sum over samples.
inline double normalized_loss(double beta0, double beta1, const KpiModel& frame, std::span<const Sample> samples) {
  double loss = 0.0;
  for (const auto& s : samples) {
    const double r = frame.normalize(s.y) - f_log(beta0 + beta1 * s.x);
    loss += r * r;
  }
  return loss;
}

inline double normalized_loss(const KpiModel& m, std::span<const Sample> samples) {
  return normalized_loss(m.beta0, m.beta1, m, samples);
}

namespace detail {

inline double residual_rms(const KpiModel& m, std::span<const Sample> samples) {
  double sum = 0.0;
  for (const auto& s : samples) {
    const double r = s.y - m.predict(s.x);
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(samples.size()));
}

/// Levenberg-damped Gauss-Newton from (m.beta0, m.beta1); returns the loss.
inline double refine(KpiModel& m, std::span<const Sample> samples, const FitOptions& opt) {
  double loss = normalized_loss(m, samples);
  double lambda = 1e-3;
  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    // J^T J and J^T r with r = y' - f, dr/dbeta = -f(1-f) [1, x]
    double a00 = 0, a01 = 0, a11 = 0, g0 = 0, g1 = 0;
    for (const auto& s : samples) {
      const double f = f_log(m.beta0 + m.beta1 * s.x);
      const double r = m.normalize(s.y) - f;
      const double d = f * (1.0 - f);
      a00 += d * d;
      a01 += d * d * s.x;
      a11 += d * d * s.x * s.x;
      g0 += d * r;
      g1 += d * r * s.x;
    }
    if (2.0 * std::hypot(g0, g1) < opt.gradient_tol) break;

    const double b00 = a00 * (1.0 + lambda) + 1e-300;
    const double b11 = a11 * (1.0 + lambda) + 1e-300;
    const double det = b00 * b11 - a01 * a01;
    if (!(det > 0.0) || !std::isfinite(det)) {
      lambda *= 10.0;
      if (lambda > 1e16) break;
      continue;
    }
    const double d0 = (b11 * g0 - a01 * g1) / det;
    const double d1 = (b00 * g1 - a01 * g0) / det;
    const double trial = normalized_loss(m.beta0 + d0, m.beta1 + d1, m, samples);
    if (trial < loss) {
      m.beta0 += d0;
      m.beta1 += d1;
      loss = trial;
      lambda = std::max(lambda * 0.1, 1e-12);
    } else {
      lambda *= 10.0;
      if (lambda > 1e16) break;
    }
  }

  return loss;
}

}  // namespace detail

/// Gaussian-residual maximum likelihood for the logistic KPI curve.
///
/// y is mapped into (0, 1) using the data range widened by a 10% margin on
/// each side, then (beta0, beta1) are found by Levenberg-damped
/// Gauss-Newton started from an ordinary least-squares fit of logit(y'),
/// and again from the best points of a coarse coefficient grid.
inline KpiModel fit(std::span<const Sample> samples, const FitOptions& opt = {}) {
  if (samples.size() < 3) {
    throw Error(ErrorCategory::TooFewSamples,
                "logistic fit needs at least 3 samples, got " + std::to_string(samples.size()));
  }
  double x_min = samples.front().x, x_max = x_min;
  double y_min = samples.front().y, y_max = y_min;
  for (const auto& s : samples) {
    if (!std::isfinite(s.x) || !std::isfinite(s.y)) {
      throw Error(ErrorCategory::InvalidArgument, "non-finite sample");
    }
    if (!(s.x > 0.0 && s.x <= 1.0)) {
      throw Error(ErrorCategory::InvalidArgument, "sample x must lie in (0, 1]");
    }
    x_min = std::min(x_min, s.x);
    x_max = std::max(x_max, s.x);
    y_min = std::min(y_min, s.y);
    y_max = std::max(y_max, s.y);
  }
  if (x_max == x_min) throw Error(ErrorCategory::DegenerateX, "all samples share the same x");

  KpiModel m;
  m.n_samples = samples.size();
  const double range = y_max - y_min;
  const double margin = std::max(opt.margin_fraction * range, opt.min_margin);
  m.y_lo = y_min - margin;
  m.y_hi = y_max + margin;

  if (range < opt.flat_range) {
    m.residual_rms = detail::residual_rms(m, samples);
    return m;
  }

  // logit-linear initial guess
  {
    const double n = static_cast<double>(samples.size());
    double sx = 0, sz = 0, sxx = 0, sxz = 0;
    for (const auto& s : samples) {
      const double p = std::clamp(m.normalize(s.y), opt.init_clamp, 1.0 - opt.init_clamp);
      const double z = logit(p);
      sx += s.x;
      sz += z;
      sxx += s.x * s.x;
      sxz += s.x * z;
    }
    const double det = n * sxx - sx * sx;
    m.beta1 = (n * sxz - sx * sz) / det;
    m.beta0 = (sz - m.beta1 * sx) / n;
  }


  // The loss surface can hold several basins, and near-step data pulls the
  // optimum towards saturation. Refine from the logit start and from the
  // best few points of a coarse coefficient grid; keep the lowest loss.
  std::vector<std::pair<double, KpiModel>> starts;
  for (int i = 0; i < opt.grid_points; ++i) {
    const double b0 = -opt.grid_beta0 + 2.0 * opt.grid_beta0 * i / (opt.grid_points - 1);
    for (int j = 0; j < opt.grid_points; ++j) {
      const double b1 = -opt.grid_beta1 + 2.0 * opt.grid_beta1 * j / (opt.grid_points - 1);
      KpiModel c = m;
      c.beta0 = b0;
      c.beta1 = b1;
      starts.emplace_back(normalized_loss(b0, b1, m, samples), c);
    }
  }
  const std::size_t keep = std::min<std::size_t>(starts.size(), static_cast<std::size_t>(std::max(opt.grid_starts, 0)));
  std::partial_sort(starts.begin(), starts.begin() + static_cast<std::ptrdiff_t>(keep), starts.end(),
                    [](const auto& a, const auto& b) { return a.first < b.first; });
  double best = detail::refine(m, samples, opt);
  for (std::size_t k = 0; k < keep; ++k) {
    KpiModel c = starts[k].second;
    const double l = detail::refine(c, samples, opt);
    if (l < best) best = l, m = c;
  }

  m.residual_rms = detail::residual_rms(m, samples);
  return m;
}

inline KpiModel fit(const std::vector<Sample>& samples, const FitOptions& opt = {}) {
  return fit(std::span<const Sample>(samples), opt);
}

}  // namespace slah
