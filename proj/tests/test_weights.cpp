#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "support.hpp"

using namespace nidtm;
using namespace nidtm::testing;

namespace {

std::vector<IDFamily> families() {
  return {IDFamily::gamma(1.0), IDFamily::gamma(0.3), IDFamily::inverse_gaussian(0.5),
          IDFamily::inverse_gaussian(4.0), IDFamily::stable(0.3), IDFamily::stable(0.5),
          IDFamily::stable(0.8)};
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

IDFamily rescaled(const IDFamily& base, double c) {
  CustomExponent e;
  e.name = "rescaled";
  e.psi = [=](double u) { return psi(base, c * u); };
  e.d1 = [=](double u) { return c * psi_deriv(base, c * u, 1); };
  e.d2 = [=](double u) { return c * c * psi_deriv(base, c * u, 2); };
  e.d3 = [=](double u) { return c * c * c * psi_deriv(base, c * u, 3); };
  return IDFamily::custom(e);
}

}  // namespace

TEST(Omega, ZeroOneZeroIsReciprocalAlpha0) {
  for (const auto& f : families())
    for (double a0 : {0.5, 1.0, 3.0}) EXPECT_NEAR(omega(f, a0, {0, 1, 0}).value * a0, 1.0, 1e-9) << f.spec();
  EXPECT_NEAR(omega(IDFamily::gamma(1.0), 1.0, {0, 1, 0}).value, 1.0, 1e-12);
}

TEST(Omega, GammaOneOneOneClosedFormAndTrapezoid) {
  // integrand u / (1+u)^4 at alpha0 = 2, integral B(2,2) = 1/6
  const double got = omega(IDFamily::gamma(1.0), 2.0, {1, 1, 1}).value;
  EXPECT_NEAR(got, 1.0 / 6.0, 1e-12);

  // independent check: trapezoid on a log grid, u = e^s, s in [-30, 30]
  const long n = 1000000;
  const double lo = -30.0, hi = 30.0, h = (hi - lo) / n;
  double s = 0.0;
  for (long i = 0; i <= n; ++i) {
    const double u = std::exp(lo + i * h);
    const double f = u * u / std::pow(1.0 + u, 4);
    s += (i == 0 || i == n) ? 0.5 * f : f;
  }
  EXPECT_NEAR(got / (s * h), 1.0, 1e-6);
}

TEST(Omega, RejectsUnsupportedIndex) {
  EXPECT_THROW(omega(IDFamily::gamma(1.0), 1.0, {0, 0, 0}), Error);
  EXPECT_THROW(omega(IDFamily::gamma(1.0), 1.0, {3, 1, 1}), Error);
  EXPECT_THROW(omega(IDFamily::gamma(1.0), 0.0, {0, 1, 0}), Error);
  try {
    omega(IDFamily::gamma(1.0), 1.0, {1, 3, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
  }
}

TEST(Weights, GammaMatchesDirichletClosedForms) {
  for (double a0 : {0.2, 1.0, 2.0, 8.0}) {
    const Weights w = compute_weights(IDFamily::gamma(1.0), a0);
    EXPECT_NEAR(w.v, -a0 / (a0 + 1.0), 1e-9) << a0;
    EXPECT_NEAR(w.v1, -a0 / (a0 + 2.0), 1e-9) << a0;
    EXPECT_NEAR(w.v2, 2.0 * a0 * a0 / ((a0 + 1.0) * (a0 + 2.0)), 1e-9) << a0;
  }
  const Weights w = compute_weights(IDFamily::gamma(1.0), 1.0);
  EXPECT_NEAR(w.v, -0.5, 1e-10);
  EXPECT_NEAR(w.v1, -1.0 / 3.0, 1e-10);
  EXPECT_NEAR(w.v2, 1.0 / 3.0, 1e-10);
}

TEST(Weights, GammaIgnoresScale) {
  const Weights a = compute_weights(IDFamily::gamma(1.0), 1.7);
  const Weights b = compute_weights(IDFamily::gamma(5.0), 1.7);
  EXPECT_NEAR(a.v, b.v, 1e-9);
  EXPECT_NEAR(a.v1, b.v1, 1e-9);
  EXPECT_NEAR(a.v2, b.v2, 1e-9);
}

TEST(Weights, StableOneHalf) {
  for (double a0 : {0.5, 1.0, 4.0}) {
    const Weights w = compute_weights(IDFamily::stable(0.5), a0);
    EXPECT_NEAR(w.v, -0.5, 1e-9) << a0;
    EXPECT_NEAR(w.v1, -0.25, 1e-9) << a0;
    EXPECT_NEAR(w.v2, 0.125, 1e-9) << a0;
  }
}

TEST(Weights, ErrorBoundsAreSmallAndNonNegative) {
  for (const auto& f : families()) {
    const Weights w = compute_weights(f, 1.0);
    EXPECT_GE(w.v_err, 0.0);
    EXPECT_LT(w.v_err, 1e-8) << f.spec();
    EXPECT_LT(w.v1_err, 1e-8) << f.spec();
    EXPECT_LT(w.v2_err, 1e-8) << f.spec();
  }
}

TEST(Weights, CorrectedSignsDiagonalizeTypesetDoNot) {
  const Vector alpha = vec({2, 2, 4});
  for (const auto& f : {IDFamily::gamma(1.0), IDFamily::inverse_gaussian(1.0), IDFamily::stable(0.5)}) {
    const NIDModel m(f, alpha);
    const HMoments hm = exact_h_moments(m);
    const Weights good = compute_weights(f, m.alpha0());
    const Weights bad = typeset_weights(f, m.alpha0());
    EXPECT_LT(max_off_diagonal(centered_h_m2(hm, good)), 1e-8) << f.spec();
    EXPECT_LT(centered_h_m3(hm, good).max_abs_off_diagonal(), 1e-8) << f.spec();
    EXPECT_GT(max_off_diagonal(centered_h_m2(hm, bad)), 1e-2) << f.spec();
    EXPECT_GT(centered_h_m3(hm, bad).max_abs_off_diagonal(), 1e-3) << f.spec();
  }
}

TEST(Weights, StableThirdOrderNeedsPositiveV2) {
  const NIDModel m(IDFamily::stable(0.5), vec({1, 1, 2}));
  const HMoments hm = exact_h_moments(m);
  Weights w = compute_weights(m.family(), m.alpha0());
  EXPECT_LT(centered_h_m3(hm, w).max_abs_off_diagonal(), 1e-8);
  w.v2 = -0.625;
  EXPECT_GT(centered_h_m3(hm, w).max_abs_off_diagonal(), 1e-2);
}

TEST(Weights, InvariantUnderArgumentRescaling) {
  for (const auto& f : {IDFamily::gamma(1.0), IDFamily::inverse_gaussian(2.0), IDFamily::stable(0.4)}) {
    for (double c : {0.1, 7.5}) {
      const Weights a = compute_weights(f, 1.3);
      const Weights b = compute_weights(rescaled(f, c), 1.3);
      EXPECT_NEAR(a.v, b.v, 1e-8) << f.spec() << " c=" << c;
      EXPECT_NEAR(a.v1, b.v1, 1e-8) << f.spec() << " c=" << c;
      EXPECT_NEAR(a.v2, b.v2, 1e-8) << f.spec() << " c=" << c;
    }
  }
}

TEST(Weights, SignPattern) {
  for (const auto& f : families())
    for (double a0 : {0.3, 1.0, 5.0}) {
      const Weights w = compute_weights(f, a0);
      EXPECT_LT(w.v, 0.0) << f.spec();
      EXPECT_LT(w.v1, 0.0) << f.spec();
      EXPECT_GT(w.v, -1.0) << f.spec();
    }
}
