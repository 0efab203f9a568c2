#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "pars/gates.hpp"

using namespace pars;
using gates::check;
using gates::GateConfig;
using recipe::Envelope;
using recipe::EnvelopeSource;

namespace {

Envelope env(double u) { return {u, u == 100.0 ? EnvelopeSource::DEFAULT_FULL_RANGE : EnvelopeSource::PLQY_FILM}; }

GateConfig eps(double e) {
  GateConfig c;
  c.eps_mae = e;
  return c;
}

}  // namespace

TEST(Gates, AllPredicatesSatisfied) {
  const auto v = check(10.8, 10.0, env(80), eps(1));
  EXPECT_TRUE(v.pass);
  EXPECT_TRUE(v.range_ok && v.mae_ok && v.envelope_ok);
  EXPECT_NEAR(v.abs_error, 0.8, 1e-12);
}

TEST(Gates, BelowRange) {
  const auto v = check(-0.5, 10.0, env(80), eps(1));
  EXPECT_FALSE(v.range_ok);
  EXPECT_FALSE(v.pass);
}

TEST(Gates, OutsideTolerance) {
  const auto v = check(12.5, 10.0, env(80), eps(1));
  EXPECT_FALSE(v.mae_ok);
  EXPECT_FALSE(v.pass);
  EXPECT_EQ(v.abs_error, 2.5);
}

TEST(Gates, AboveEnvelopeDespiteTolerance) {
  const auto v = check(85.0, 84.5, env(80), eps(1));
  EXPECT_TRUE(v.mae_ok);
  EXPECT_TRUE(v.range_ok);
  EXPECT_FALSE(v.envelope_ok);
  EXPECT_FALSE(v.pass);
}

TEST(Gates, BoundariesAreInclusive) {
  EXPECT_TRUE(check(0.0, 0.5, env(100), eps(1)).pass);
  EXPECT_TRUE(check(100.0, 99.5, env(100), eps(1)).pass);
  EXPECT_TRUE(check(11.0, 10.0, env(80), eps(1)).mae_ok);
  EXPECT_TRUE(check(9.0, 10.0, env(80), eps(1)).mae_ok);
  EXPECT_TRUE(check(80.0, 79.5, env(80), eps(1)).pass);
  EXPECT_TRUE(check(10.0, 10.0, env(80), eps(0)).pass);
  EXPECT_FALSE(check(100.25, 100.0, env(100), eps(1)).range_ok);
}

TEST(Gates, NonFiniteInputRejected) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  const double inf = std::numeric_limits<double>::infinity();
  for (auto [p, y] : {std::pair{nan, 1.0}, std::pair{1.0, nan}, std::pair{inf, 1.0}, std::pair{1.0, -inf}}) {
    try {
      check(p, y, env(80), eps(1));
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::NonFiniteInput);
    }
  }
}

TEST(Gates, ConfigValidation) {
  EXPECT_NO_THROW(gates::validate(eps(0)));
  EXPECT_THROW(gates::validate(eps(-0.1)), Error);
  GateConfig c;
  c.range_lo = 100;
  EXPECT_THROW(gates::validate(c), Error);
}

TEST(Gates, ViolationPredicate) {
  EXPECT_TRUE(gates::violates(101, 100));
  EXPECT_TRUE(gates::violates(-0.01, 100));
  EXPECT_TRUE(gates::violates(80.01, 80));
  EXPECT_FALSE(gates::violates(80, 80));
  EXPECT_FALSE(gates::violates(0, 80));
}

// Each predicate evaluated on its own, written against the inequalities rather
// than the implementation.
TEST(GatesProperty, PassEqualsConjunctionOfPredicates) {
  std::mt19937_64 gen(20240601);
  std::uniform_real_distribution<double> wide(-30.0, 130.0), truth(0.0, 100.0), eps_d(0.0, 5.0), u_d(0.5, 100.0);
  std::uniform_int_distribution<int> mode(0, 5), grid(-120, 520);
  const auto q = [](int k) { return k * 0.25; };  // exact binary fractions for equality cases

  int boundary_cases = 0;
  for (int i = 0; i < 200000; ++i) {
    double p, y, e, u;
    switch (mode(gen)) {
      case 0:  // prediction exactly at truth ± eps
        y = q(grid(gen) / 5 + 40);
        e = q(std::abs(grid(gen)) % 20);
        p = (i % 2 == 0) ? y + e : y - e;
        u = u_d(gen);
        ++boundary_cases;
        break;
      case 1:  // prediction exactly at the envelope
        u = q(std::abs(grid(gen)) % 400 + 1);
        p = u;
        y = p + q(grid(gen) % 8);
        e = q(std::abs(grid(gen)) % 12);
        ++boundary_cases;
        break;
      case 2:  // prediction exactly at a range end
        p = (i % 2 == 0) ? 0.0 : 100.0;
        y = p + q(grid(gen) % 8);
        e = q(std::abs(grid(gen)) % 12);
        u = (i % 3 == 0) ? 100.0 : u_d(gen);
        ++boundary_cases;
        break;
      case 3:  // full-range envelope
        p = wide(gen), y = truth(gen), e = eps_d(gen), u = 100.0;
        break;
      default:
        p = wide(gen), y = truth(gen), e = eps_d(gen), u = u_d(gen);
        break;
    }
    const bool range = !(p < 0.0) && !(p > 100.0);
    const bool near = !(std::fabs(p - y) > e);
    const bool under = !(p > u);
    const auto v = check(p, y, env(u), eps(e));
    ASSERT_EQ(v.range_ok, range) << p;
    ASSERT_EQ(v.mae_ok, near) << p << " " << y << " " << e;
    ASSERT_EQ(v.envelope_ok, under) << p << " " << u;
    ASSERT_EQ(v.pass, range && near && under);
    ASSERT_EQ(v.abs_error, std::fabs(p - y));
    if (u == 100.0) {
      ASSERT_EQ(v.pass, range && near);
    }
  }
  EXPECT_GT(boundary_cases, 50000);
}
