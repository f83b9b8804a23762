#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <string_view>

#include "nidtm/error.hpp"

namespace nidtm {

enum class FamilyKind { Gamma, GammaStable, InverseGaussian, Custom };

/// User-supplied base Laplace exponent and its first three derivatives.
struct CustomExponent {
  std::string name = "custom";
  std::function<double(double)> psi;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;
};

/// A positive infinitely divisible law, represented only through its base
/// Laplace exponent Psi (E[exp(-u z)] = exp(-Psi(u))). Per-coordinate
/// exponents alpha_i * Psi are formed by callers.
class IDFamily {
 public:
  /// Gamma(shape, scale): Psi(u) = ln(1 + scale * u).
  static IDFamily gamma(double scale = 1.0) {
    if (!(scale > 0.0) || !std::isfinite(scale))
      fail(ErrorKind::Domain, "gamma scale must be positive, got " + std::to_string(scale));
    return IDFamily(FamilyKind::Gamma, scale);
  }

  /// Positive gamma-stable: Psi(u) = Gamma(1-g) / (sqrt(2 pi) g) * u^g.
  static IDFamily stable(double index) {
    if (!(index > 0.0 && index < 1.0))
      fail(ErrorKind::Domain, "stable index must lie in (0,1), got " + std::to_string(index));
    return IDFamily(FamilyKind::GammaStable, index);
  }

  /// Inverse Gaussian: Psi(u) = sqrt(2u + lambda^2) - lambda.
  static IDFamily inverse_gaussian(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
      fail(ErrorKind::Domain, "inverse Gaussian lambda must be positive, got " + std::to_string(lambda));
    return IDFamily(FamilyKind::InverseGaussian, lambda);
  }

  /// Custom exponent. The callbacks are checked against finite differences
  /// of psi on a few points; inconsistent derivatives are rejected.
  static IDFamily custom(CustomExponent exponent, double drift = 0.0);

  FamilyKind kind() const noexcept { return kind_; }
  /// Scale (Gamma), index (stable) or lambda (inverse Gaussian).
  double parameter() const noexcept { return param_; }
  /// Deterministic part tau of the Levy-Khintchine pair.
  double drift() const noexcept { return drift_; }
  const CustomExponent* custom_exponent() const noexcept { return custom_.get(); }

  /// Stable exponent constant Gamma(1-g)/(sqrt(2 pi) g).
  double stable_constant() const {
    return std::tgamma(1.0 - param_) / (std::sqrt(2.0 * std::numbers::pi) * param_);
  }

  /// Textual form used in files and on the command line, e.g. "invgauss:4",
  /// with the parameter in shortest round-trip form.
  std::string spec() const {
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, param_).ptr;
    const std::string value(buf, end);
    switch (kind_) {
      case FamilyKind::Gamma: return "gamma:" + value;
      case FamilyKind::GammaStable: return "stable:" + value;
      case FamilyKind::InverseGaussian: return "invgauss:" + value;
      case FamilyKind::Custom: break;
    }
    return "custom:" + custom_->name;
  }

 private:
  IDFamily(FamilyKind kind, double param) : kind_(kind), param_(param) {}

  FamilyKind kind_;
  double param_ = 0.0;
  double drift_ = 0.0;
  std::shared_ptr<const CustomExponent> custom_;
};

inline double psi(const IDFamily& family, double u) {
  if (!(u >= 0.0)) fail(ErrorKind::Domain, "psi requires u >= 0");
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::Gamma: return std::log1p(p * u);
    case FamilyKind::GammaStable: return family.stable_constant() * std::pow(u, p);
    case FamilyKind::InverseGaussian: {
      // sqrt(2u + l^2) - l without cancellation for small u
      const double root = std::sqrt(2.0 * u + p * p);
      return 2.0 * u / (root + p);
    }
    case FamilyKind::Custom: return family.custom_exponent()->psi(u) + family.drift() * u;
  }
  return 0.0;
}

inline double psi_deriv(const IDFamily& family, double u, int order) {
  if (order < 1 || order > 3)
    fail(ErrorKind::Domain, "psi derivative order must be 1..3, got " + std::to_string(order));
  const double p = family.parameter();
  switch (family.kind()) {
    case FamilyKind::Gamma: {
      if (!(u >= 0.0)) fail(ErrorKind::Domain, "psi_deriv requires u >= 0 for gamma");
      const double t = 1.0 / (1.0 + p * u);
      if (order == 1) return p * t;
      if (order == 2) return -p * p * t * t;
      return 2.0 * p * p * p * t * t * t;
    }
    case FamilyKind::GammaStable: {
      if (!(u > 0.0)) fail(ErrorKind::Domain, "stable exponent derivatives are singular at u <= 0");
      const double c = family.stable_constant();
      if (order == 1) return c * p * std::pow(u, p - 1.0);
      if (order == 2) return c * p * (p - 1.0) * std::pow(u, p - 2.0);
      return c * p * (p - 1.0) * (p - 2.0) * std::pow(u, p - 3.0);
    }
    case FamilyKind::InverseGaussian: {
      if (!(u >= 0.0)) fail(ErrorKind::Domain, "psi_deriv requires u >= 0 for inverse Gaussian");
      const double s = 2.0 * u + p * p;
      if (order == 1) return 1.0 / std::sqrt(s);
      if (order == 2) return -std::pow(s, -1.5);
      return 3.0 * std::pow(s, -2.5);
    }
    case FamilyKind::Custom: {
      if (!(u > 0.0)) fail(ErrorKind::Domain, "custom exponent derivatives require u > 0");
      const auto* c = family.custom_exponent();
      if (order == 1) return c->d1(u) + family.drift();
      if (order == 2) return c->d2(u);
      return c->d3(u);
    }
  }
  return 0.0;
}

inline IDFamily IDFamily::custom(CustomExponent exponent, double drift) {
  if (!exponent.psi || !exponent.d1 || !exponent.d2 || !exponent.d3)
    fail(ErrorKind::InvalidInput, "custom exponent needs psi and three derivatives");
  if (!(drift >= 0.0)) fail(ErrorKind::Domain, "drift must be nonnegative");
  if (std::abs(exponent.psi(0.0)) > 1e-12)
    fail(ErrorKind::InvalidInput, "custom exponent must satisfy psi(0) = 0");

  const std::function<double(double)>* fns[] = {&exponent.psi, &exponent.d1, &exponent.d2,
                                                &exponent.d3};
  for (double u : {0.1, 1.0, 10.0}) {
    for (int n = 1; n <= 3; ++n) {
      const auto& f = *fns[n - 1];
      const double h = 1e-4 * u;
      const double fd = (f(u + h) - f(u - h)) / (2.0 * h);
      const double analytic = (*fns[n])(u);
      if (std::abs(fd - analytic) > 1e-4 * (std::abs(analytic) + 1e-8))
        fail(ErrorKind::InvalidInput, "custom exponent '" + exponent.name + "': derivative " +
                                          std::to_string(n) + " disagrees with finite differences");
    }
  }
  IDFamily family(FamilyKind::Custom, 0.0);
  family.drift_ = drift;
  family.custom_ = std::make_shared<const CustomExponent>(std::move(exponent));
  return family;
}

/// Parses "gamma:<scale>", "stable:<index>" or "invgauss:<lambda>".
/// "dirichlet" is accepted as shorthand for gamma:1.
inline IDFamily parse_family(std::string_view text) {
  if (text == "dirichlet") return IDFamily::gamma(1.0);
  const auto colon = text.find(':');
  if (colon == std::string_view::npos)
    fail(ErrorKind::InvalidInput, "family spec '" + std::string(text) + "' must look like kind:param");
  const std::string kind(text.substr(0, colon));
  const std::string value(text.substr(colon + 1));
  double param = 0.0;
  try {
    std::size_t used = 0;
    param = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidInput, "family parameter '" + value + "' is not a number");
  }
  if (kind == "gamma") return IDFamily::gamma(param);
  if (kind == "stable") return IDFamily::stable(param);
  if (kind == "invgauss") return IDFamily::inverse_gaussian(param);
  fail(ErrorKind::InvalidInput, "unknown family kind '" + kind + "'");
}

}  // namespace nidtm
