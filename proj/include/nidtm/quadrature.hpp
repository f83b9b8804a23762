#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <utility>
#include <vector>

namespace nidtm::quad {

struct Options {
  double abs_tol = 1e-9;
  double rel_tol = 1e-7;
  int max_panels = 20000;
  /// Integration range on the real line is truncated where |f| falls below
  /// this fraction of the largest value seen.
  double truncation = 1e-30;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
  bool converged = true;
};

template <int N>
struct GaussLegendre {
  std::array<double, N> x{};
  std::array<double, N> w{};

  GaussLegendre() {
    // Newton iteration on P_N starting from the Chebyshev-like guess.
    for (int i = 0; i < (N + 1) / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
      double pp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p1 = 1.0, p2 = 0.0;
        for (int j = 1; j <= N; ++j) {
          const double p3 = p2;
          p2 = p1;
          p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
        }
        pp = N * (z * p1 - p2) / (z * z - 1.0);
        const double z1 = z;
        z = z1 - p1 / pp;
        if (std::abs(z - z1) < 1e-16) break;
      }
      x[i] = -z;
      x[N - 1 - i] = z;
      w[i] = w[N - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
  }
};

inline const GaussLegendre<16>& rule16() {
  static const GaussLegendre<16> rule;
  return rule;
}

template <class F>
double gauss16(F& f, double a, double b) {
  const auto& r = rule16();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double sum = 0.0;
  for (int i = 0; i < 16; ++i) sum += r.w[i] * f(mid + half * r.x[i]);
  return sum * half;
}

namespace detail {

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel make_panel(F& f, double a, double b) {
  const double mid = 0.5 * (a + b);
  const double whole = gauss16(f, a, b);
  const double halves = gauss16(f, a, mid) + gauss16(f, mid, b);
  return {a, b, halves, std::abs(halves - whole)};
}

}  // namespace detail

/// Globally adaptive Gauss-Legendre on [a, b]: each panel is scored by the
/// difference between one 16-point rule and two half-width rules, and the
/// worst panel is bisected until the total error meets the tolerance.
template <class F>
Result integrate(F f, double a, double b, const Options& opt = {},
                 int initial_panels = 1) {
  std::priority_queue<detail::Panel> heap;
  const int n0 = std::max(1, initial_panels);
  const double width = (b - a) / n0;
  for (int i = 0; i < n0; ++i) {
    const double lo = a + i * width;
    const double hi = (i + 1 == n0) ? b : lo + width;
    heap.push(detail::make_panel(f, lo, hi));
  }

  double value = 0.0, error = 0.0;
  {
    auto copy = heap;
    for (; !copy.empty(); copy.pop()) {
      value += copy.top().value;
      error += copy.top().error;
    }
  }

  Result res;
  int panels = n0;
  while (error > std::max(opt.abs_tol, opt.rel_tol * std::abs(value))) {
    if (panels >= opt.max_panels) {
      res.converged = false;
      break;
    }
    const detail::Panel worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // cannot bisect further in double precision
      res.converged = false;
      heap.push(worst);
      break;
    }
    const detail::Panel left = detail::make_panel(f, worst.a, mid);
    const detail::Panel right = detail::make_panel(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }

  // Final totals summed afresh so running-sum drift never leaks out.
  res.value = 0.0;
  res.error = 0.0;
  for (; !heap.empty(); heap.pop()) {
    res.value += heap.top().value;
    res.error += heap.top().error;
  }
  res.panels = panels;
  if (!std::isfinite(res.value)) res.converged = false;
  return res;
}

struct Support {
  double lo = -1.0, hi = 1.0;
  /// |g| is still above the truncation level at an end of the scanned range.
  bool clipped = false;
};

/// Finds [lo, hi] outside of which |g| is negligible relative to its peak,
/// by a coarse scan of the whole representable range of s = log(u).
template <class G>
Support find_support(G& g, double truncation) {
  constexpr double kLimitLo = -740.0, kLimitHi = 700.0, kStep = 0.25;
  std::vector<double> mags;
  mags.reserve(static_cast<std::size_t>((kLimitHi - kLimitLo) / kStep) + 1);
  double scale = 0.0;
  for (double s = kLimitLo; s <= kLimitHi; s += kStep) {
    const double v = std::abs(g(s));
    mags.push_back(v);
    scale = std::max(scale, v);
  }
  if (scale == 0.0) return {};
  std::size_t first = mags.size(), last = 0;
  for (std::size_t i = 0; i < mags.size(); ++i) {
    if (mags[i] > truncation * scale) {
      first = std::min(first, i);
      last = i;
    }
  }
  const double lo = std::max(kLimitLo, kLimitLo + kStep * first - 1.0);
  const double hi = std::min(kLimitHi, kLimitLo + kStep * last + 1.0);
  return {lo, hi, first == 0 || last + 1 == mags.size()};
}

/// Integrates f over (0, inf) through the substitution u = exp(s), which turns
/// algebraic tails and integrable end-point singularities into exponentially
/// decaying ones in s.
template <class F>
Result integrate_half_line(F f, const Options& opt = {}) {
  auto g = [&f](double s) {
    const double u = std::exp(s);
    const double v = f(u) * u;
    return std::isfinite(v) ? v : 0.0;
  };
  const Support sup = find_support(g, opt.truncation);
  const int panels = std::max(4, static_cast<int>((sup.hi - sup.lo) / 2.0));
  Result r = integrate(g, sup.lo, sup.hi, opt, panels);
  if (sup.clipped) r.converged = false;
  return r;
}

struct LogResult {
  double log_value = -std::numeric_limits<double>::infinity();
  double rel_error = 0.0;
  bool converged = true;
};

/// log of the integral over the real line of exp(log_g(s)), for unimodal
/// log_g with its mass inside [-740, 700].
template <class LogG>
LogResult integrate_log_line(LogG log_g, const Options& opt = {}) {
  auto h = [&log_g](double s) {
    const double v = log_g(s);
    return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
  };
  double peak = -std::numeric_limits<double>::infinity();
  double peak_s = 0.0;
  for (double s = -740.0; s <= 700.0; s += 1.0) {
    const double v = h(s);
    if (v > peak) {
      peak = v;
      peak_s = s;
    }
  }
  LogResult out;
  if (!std::isfinite(peak)) return out;

  // log-integrands here are unimodal in s, and can be very narrow when the
  // argument is extreme, so refine the peak by golden section
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = peak_s - 1.0, b = peak_s + 1.0;
  double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
  double f1 = h(x1), f2 = h(x2);
  for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(peak_s)); ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = h(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = h(x1);
    }
  }
  if (f1 > peak) {
    peak = f1;
    peak_s = x1;
  }
  if (f2 > peak) {
    peak = f2;
    peak_s = x2;
  }

  // walk out from the peak with doubling steps until below truncation
  const double floor = std::log(opt.truncation);
  auto edge = [&](double dir, double limit) {
    double step = 1e-12 * std::max(1.0, std::abs(peak_s));
    double s = peak_s + dir * step;
    while ((s - limit) * dir < 0.0 && h(s) - peak > floor) {
      step *= 2.0;
      s = peak_s + dir * step;
    }
    return (s - limit) * dir < 0.0 ? s : limit;
  };
  const double lo = edge(-1.0, -745.0);
  const double hi = edge(1.0, 710.0);

  auto g = [&](double s) { return std::exp(std::min(h(s) - peak, 0.0)); };
  Options inner = opt;
  inner.abs_tol = 0.0;
  const Result left = integrate(g, lo, peak_s, inner, 8);
  const Result right = integrate(g, peak_s, hi, inner, 8);
  Result r;
  r.value = left.value + right.value;
  r.error = left.error + right.error;
  r.converged = left.converged && right.converged;
  out.log_value = peak + std::log(r.value);
  out.rel_error = r.value > 0 ? r.error / r.value : 1.0;
  out.converged = r.converged;
  return out;
}

/// log of the integral over (0, inf) of exp(log_f(u)); safe when the
/// integrand's magnitude would overflow or underflow a double.
template <class LogF>
LogResult integrate_log_half_line(LogF log_f, const Options& opt = {}) {
  return integrate_log_line([&log_f](double s) { return log_f(std::exp(s)) + s; }, opt);
}

}  // namespace nidtm::quad
