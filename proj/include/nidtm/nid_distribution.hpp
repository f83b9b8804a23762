#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "nidtm/error.hpp"
#include "nidtm/levy_exponent.hpp"
#include "nidtm/parallel.hpp"
#include "nidtm/quadrature.hpp"

namespace nidtm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Homogeneous NID law: coordinate i has Laplace exponent alpha_i * Psi.
class NIDModel {
 public:
  NIDModel(IDFamily family, Vector alpha) : family_(std::move(family)), alpha_(std::move(alpha)) {
    if (alpha_.size() < 2) fail(ErrorKind::InvalidInput, "NID model needs k >= 2 coordinates");
    for (Eigen::Index i = 0; i < alpha_.size(); ++i)
      if (!(alpha_[i] > 0.0) || !std::isfinite(alpha_[i]))
        fail(ErrorKind::Domain, "alpha[" + std::to_string(i) + "] must be positive and finite");
    if (family_.drift() != 0.0)
      fail(ErrorKind::Domain, "families with nonzero drift are not supported");
  }

  const IDFamily& family() const noexcept { return family_; }
  const Vector& alpha() const noexcept { return alpha_; }
  int k() const noexcept { return static_cast<int>(alpha_.size()); }
  double alpha0() const noexcept { return alpha_.sum(); }

 private:
  IDFamily family_;
  Vector alpha_;
};

/// A point on the probability simplex.
class SimplexPoint {
 public:
  explicit SimplexPoint(Vector h) : h_(std::move(h)) {
    if (h_.size() < 1) fail(ErrorKind::InvalidInput, "empty simplex point");
    if ((h_.array() < 0.0).any() || !h_.allFinite())
      fail(ErrorKind::Domain, "simplex point has a negative or non-finite coordinate");
    if (std::abs(h_.sum() - 1.0) > 1e-12)
      fail(ErrorKind::Domain, "simplex point coordinates must sum to one");
  }

  /// Rescales a nonnegative vector onto the simplex.
  static SimplexPoint normalized(const Vector& v) {
    const double s = v.sum();
    if (!(s > 0.0)) fail(ErrorKind::Domain, "cannot normalize a vector with nonpositive sum");
    return SimplexPoint(v / s);
  }

  const Vector& values() const noexcept { return h_; }
  double operator[](Eigen::Index i) const { return h_[i]; }
  int size() const noexcept { return static_cast<int>(h_.size()); }
  bool interior() const { return (h_.array() > 0.0).all(); }

 private:
  Vector h_;
};

using MultiIndex = std::vector<int>;

inline int order_of(const MultiIndex& r) {
  int total = 0;
  for (int x : r) {
    if (x < 0) fail(ErrorKind::Domain, "multi-index entries must be nonnegative");
    total += x;
  }
  return total;
}

/// Complete Bell polynomial Y_n(x1..xn) for n <= 3.
inline double bell_complete(std::span<const double> x, int order) {
  if (order < 0 || order > 3) fail(ErrorKind::Domain, "Bell polynomial order must be 0..3");
  if (static_cast<int>(x.size()) < order)
    fail(ErrorKind::InvalidInput, "Bell polynomial needs at least `order` arguments");
  switch (order) {
    case 0: return 1.0;
    case 1: return x[0];
    case 2: return x[0] * x[0] + x[1];
    default: return x[0] * x[0] * x[0] + 3.0 * x[0] * x[1] + x[2];
  }
}

namespace detail {

inline double log_gamma_variate(double shape, Rng& rng) {
  // For shape < 1 use G(a) = G(a+1) * U^(1/a) in log space; small shapes
  // otherwise underflow to zero.
  if (shape < 1.0) {
    std::gamma_distribution<double> g(shape + 1.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = 0.0;
    while (u == 0.0) u = unif(rng);
    return std::log(g(rng)) + std::log(u) / shape;
  }
  std::gamma_distribution<double> g(shape, 1.0);
  return std::log(g(rng));
}

/// Inverse Gaussian(mean, shape) by the Michael-Schucany-Haas transformation.
inline double inverse_gaussian_variate(double mean, double shape, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double n = normal(rng);
  const double y = n * n;
  const double t = mean * y / (2.0 * shape);
  // mean * (1 + t - sqrt(t^2 + 2t)), written without cancellation
  const double x = mean / (1.0 + t + std::sqrt(t * t + 2.0 * t));
  return unif(rng) <= mean / (mean + x) ? x : mean * mean / x;
}

/// log of a positive stable variate with E[exp(-u X)] = exp(-u^g)
/// (Kanter's representation).
inline double log_positive_stable_variate(double g, Rng& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  double u = 0.0;
  while (u == 0.0) u = unif(rng);
  const double angle = std::numbers::pi * u;
  const double e = expo(rng);
  return std::log(std::sin(g * angle)) - std::log(std::sin(angle)) / g +
         (1.0 - g) / g * (std::log(std::sin((1.0 - g) * angle)) - std::log(e));
}

/// log z_i for one coordinate with exponent weight a.
inline double log_latent_variate(const IDFamily& family, double a, Rng& rng) {
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::Gamma: return log_gamma_variate(a, rng) + std::log(p);
    case FamilyKind::GammaStable:
      return std::log(a * family.stable_constant()) / p + log_positive_stable_variate(p, rng);
    case FamilyKind::InverseGaussian:
      return std::log(inverse_gaussian_variate(a / p, a * a, rng));
    case FamilyKind::Custom: break;
  }
  fail(ErrorKind::Unsupported, "no sampler for family " + family.spec());
}

}  // namespace detail

/// Draws topic proportions for any k >= 1 (k = 1 is the point mass at 1).
inline Vector sample_proportions(const IDFamily& family, const Vector& alpha, Rng& rng) {
  constexpr int kMaxRetries = 100;
  const Eigen::Index k = alpha.size();
  Vector logz(k);
  if (k == 1) return Vector::Ones(1);
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    bool ok = true;
    for (Eigen::Index i = 0; i < k && ok; ++i) {
      logz[i] = detail::log_latent_variate(family, alpha[i], rng);
      ok = std::isfinite(logz[i]);
    }
    if (!ok) continue;
    const double top = logz.maxCoeff();
    Vector h = (logz.array() - top).exp();
    h /= h.sum();
    if (h.allFinite()) return h;
  }
  fail(ErrorKind::Sampler, "latent draw was non-finite after repeated retries for " + family.spec());
}

inline SimplexPoint sample(const NIDModel& model, Rng& rng) {
  return SimplexPoint::normalized(sample_proportions(model.family(), model.alpha(), rng));
}

namespace detail {

/// (-1)^r e^{aPsi} d^r/du^r e^{-aPsi}, assembled as a Bell polynomial in
/// (a Psi', -a Psi'', a Psi''').
inline double bell_factor(const IDFamily& family, double a, int r, double u) {
  if (r == 0) return 1.0;
  double x[3] = {0.0, 0.0, 0.0};
  x[0] = a * psi_deriv(family, u, 1);
  if (r >= 2) x[1] = -a * psi_deriv(family, u, 2);
  if (r >= 3) x[2] = a * psi_deriv(family, u, 3);
  return bell_complete(std::span<const double>(x, 3), r);
}

}  // namespace detail

struct MomentValue {
  double value = 0.0;
  double error = 0.0;
};

/// E[prod h_i^{r_i}] for total order 1..3 by univariate quadrature.
inline MomentValue moment_with_error(const NIDModel& model, const MultiIndex& r,
                                     const quad::Options& opt = {}) {
  if (static_cast<int>(r.size()) != model.k())
    fail(ErrorKind::InvalidInput, "multi-index length must equal k");
  const int order = order_of(r);
  if (order < 1 || order > 3) fail(ErrorKind::Domain, "moment order must be 1..3");

  const IDFamily& family = model.family();
  const double alpha0 = model.alpha0();
  const Vector& alpha = model.alpha();
  auto integrand = [&](double u) {
    const double decay = std::exp(-alpha0 * psi(family, u));
    if (decay == 0.0) return 0.0;
    double prod = decay * std::pow(u, order - 1);
    for (int j = 0; j < model.k(); ++j)
      if (r[j] > 0) prod *= detail::bell_factor(family, alpha[j], r[j], u);
    return prod;
  };
  const quad::Result q = quad::integrate_half_line(integrand, opt);
  const double norm = std::tgamma(static_cast<double>(order));
  if (!q.converged)
    fail(ErrorKind::Quadrature, "moment quadrature did not converge (achieved error " +
                                    std::to_string(q.error / norm) + ")");
  return {q.value / norm, q.error / norm};
}

inline double moment(const NIDModel& model, const MultiIndex& r) {
  return moment_with_error(model, r).value;
}

namespace detail {

inline double log_marginal_density(const IDFamily& family, double a, double x) {
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::Gamma:
      return (a - 1.0) * std::log(x) - x / p - std::lgamma(a) - a * std::log(p);
    case FamilyKind::InverseGaussian: {
      const double dev = a - p * x;
      return std::log(a) - 0.5 * std::log(2.0 * std::numbers::pi) - 1.5 * std::log(x) -
             dev * dev / (2.0 * x);
    }
    case FamilyKind::GammaStable: {
      // gamma = 1/2: a Levy law with scale s = (a c)^2 / 2
      const double s = 0.5 * std::pow(a * family.stable_constant(), 2);
      return 0.5 * std::log(s / (2.0 * std::numbers::pi)) - 1.5 * std::log(x) - s / (2.0 * x);
    }
    case FamilyKind::Custom: break;
  }
  return 0.0;
}

/// log K_nu(x) from K_nu(x) = 1/2 int exp(nu t - x cosh t) dt, with t
/// rescaled so the integrand keeps unit width for large x.
inline double log_bessel_k(double nu, double x) {
  const double c = 1.0 / std::sqrt(std::max(x, 1.0));
  auto log_g = [&](double tau) {
    const double sh = std::sinh(0.5 * c * tau);
    return nu * c * tau - 2.0 * x * sh * sh;
  };
  const quad::LogResult r = quad::integrate_log_line(log_g);
  if (!r.converged)
    fail(ErrorKind::Quadrature, "Bessel quadrature did not converge (relative error " +
                                    std::to_string(r.rel_error) + ")");
  return std::log(0.5 * c) - x + r.log_value;
}

}  // namespace detail

inline bool has_closed_form_density(const IDFamily& family) {
  return family.kind() == FamilyKind::Gamma || family.kind() == FamilyKind::InverseGaussian ||
         (family.kind() == FamilyKind::GammaStable && family.parameter() == 0.5);
}

/// log f(h) = log of the integral over Z of prod_i f_i(h_i Z) Z^{k-1}.
inline double log_density(const NIDModel& model, const SimplexPoint& h) {
  const IDFamily& family = model.family();
  if (!has_closed_form_density(family))
    fail(ErrorKind::Unsupported, "no closed-form marginal density for " + family.spec());
  if (h.size() != model.k()) fail(ErrorKind::InvalidInput, "point dimension must equal k");
  if (!h.interior()) fail(ErrorKind::Domain, "density is only evaluated at interior points");

  const Vector& alpha = model.alpha();
  const int k = model.k();
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::InverseGaussian: {
      // prod_i f_i(h_i z) z^{k-1} = C z^{-k/2-1} exp(-A/z - B z)
      Vector terms(k);
      double c = 0.0;
      for (int i = 0; i < k; ++i) {
        terms[i] = 2.0 * std::log(alpha[i]) - std::log(2.0 * h[i]);
        c += std::log(alpha[i]) - 0.5 * std::log(2.0 * std::numbers::pi) - 1.5 * std::log(h[i]) + alpha[i] * p;
      }
      const double log_a = terms.maxCoeff() + std::log((terms.array() - terms.maxCoeff()).exp().sum());
      const double log_b = std::log(0.5 * p * p * h.values().sum());
      const double nu = 0.5 * k;
      const double x = 2.0 * std::exp(0.5 * (log_a + log_b));
      return c + std::log(2.0) - 0.5 * nu * (log_a - log_b) + detail::log_bessel_k(nu, x);
    }
    case FamilyKind::GammaStable: {
      // prod_i f_i(h_i z) z^{k-1} = C z^{-k/2-1} exp(-A/z)
      Vector terms(k);
      double c = 0.0;
      for (int i = 0; i < k; ++i) {
        const double scale = 0.5 * std::pow(alpha[i] * family.stable_constant(), 2);
        terms[i] = std::log(scale) - std::log(2.0 * h[i]);
        c += 0.5 * std::log(scale / (2.0 * std::numbers::pi)) - 1.5 * std::log(h[i]);
      }
      const double log_a = terms.maxCoeff() + std::log((terms.array() - terms.maxCoeff()).exp().sum());
      return c + std::lgamma(0.5 * k) - 0.5 * k * log_a;
    }
    default: break;
  }

  auto log_integrand = [&](double z) {
    double total = (k - 1) * std::log(z);
    for (int i = 0; i < k; ++i) total += detail::log_marginal_density(family, alpha[i], h[i] * z);
    return total;
  };
  const quad::LogResult r = quad::integrate_log_half_line(log_integrand);
  if (!r.converged)
    fail(ErrorKind::Quadrature, "density quadrature did not converge (relative error " +
                                    std::to_string(r.rel_error) + ")");
  return r.log_value;
}

inline double density(const NIDModel& model, const SimplexPoint& h) {
  return std::exp(log_density(model, h));
}

struct CorrelationProfile {
  Matrix correlation;
  double positive_proportion = 0.0;
};

inline CorrelationProfile correlation_profile(const NIDModel& model) {
  const int k = model.k();
  Vector mean(k);
  Matrix second(k, k);
  MultiIndex r(k, 0);
  for (int i = 0; i < k; ++i) {
    r.assign(k, 0);
    r[i] = 1;
    mean[i] = moment(model, r);
    for (int j = i; j < k; ++j) {
      r.assign(k, 0);
      ++r[i];
      ++r[j];
      second(i, j) = second(j, i) = moment(model, r);
    }
  }
  const Matrix cov = second - mean * mean.transpose();
  CorrelationProfile out;
  out.correlation = Matrix::Identity(k, k);
  int positive = 0;
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      const double c = cov(i, j) / std::sqrt(cov(i, i) * cov(j, j));
      out.correlation(i, j) = out.correlation(j, i) = c;
      if (c > 0.0) ++positive;
    }
  }
  out.positive_proportion = static_cast<double>(positive) / (k * (k - 1) / 2);
  return out;
}

}  // namespace nidtm
