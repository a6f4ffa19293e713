#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jdm/quadrature.hpp"

using jdm::GK15Rule;
using jdm::gk15_integrate;

TEST(GK15Rule, WeightsAndSymmetry) {
  double sum = 0.0;
  for (double w : GK15Rule::weights) {
    EXPECT_GT(w, 0.0);
    sum += w;
  }
  EXPECT_NEAR(sum, 2.0, 1e-12);
  for (std::size_t j = 0; j < 15; ++j) {
    EXPECT_GT(GK15Rule::nodes[j], -1.0);
    EXPECT_LT(GK15Rule::nodes[j], 1.0);
    // the mirror node carries the same weight
    bool found = false;
    for (std::size_t k = 0; k < 15; ++k)
      if (GK15Rule::nodes[k] == -GK15Rule::nodes[j] && GK15Rule::weights[k] == GK15Rule::weights[j]) found = true;
    EXPECT_TRUE(found) << j;
  }
}

TEST(GK15Rule, ReferenceConstants) {
  EXPECT_EQ(GK15Rule::nodes[0], -0.949107912342758524526189684047851);
  EXPECT_EQ(GK15Rule::nodes[7], -0.991455371120812639206854697526329);
  EXPECT_EQ(GK15Rule::weights[3], 0.209482141084727828012999174891714);
  EXPECT_EQ(GK15Rule::weights[14], 0.022935322010529224963732008058970);
  EXPECT_EQ(GK15Rule::abscissa(3, 2.0, 4.0), 3.0);
}

TEST(GK15, Examples) {
  EXPECT_NEAR(gk15_integrate([](double) { return 1.0; }, 0.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(gk15_integrate([](double u) { return std::pow(u, 10); }, 0.0, 1.0), 1.0 / 11.0, 1e-13);
  EXPECT_NEAR(gk15_integrate([](double u) { return std::exp(u); }, 0.0, 2.0), std::exp(2.0) - 1.0, 1e-10);
}

TEST(GK15, PolynomialExactnessToDegree22) {
  for (int d = 0; d <= 22; ++d) {
    const double got = gk15_integrate([d](double u) { return std::pow(u, d); }, -1.0, 1.0);
    const double want = d % 2 ? 0.0 : 2.0 / (d + 1);
    EXPECT_NEAR(got, want, 1e-12) << d;
    const double on01 = gk15_integrate([d](double u) { return std::pow(u, d); }, 0.0, 1.0);
    EXPECT_NEAR(on01, 1.0 / (d + 1), 1e-12) << d;
  }
}

TEST(GK15, Linearity) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  for (int r = 0; r < 50; ++r) {
    double c[6], e[6];
    for (int k = 0; k < 6; ++k) c[k] = z(rng), e[k] = z(rng);
    const auto f = [&](double u) { double s = 0, p = 1; for (double ck : c) s += ck * p, p *= u; return s; };
    const auto g = [&](double u) { double s = 0, p = 1; for (double ek : e) s += ek * p, p *= u; return s; };
    const double a = z(rng), b = z(rng);
    const double lhs = gk15_integrate([&](double u) { return a * f(u) + b * g(u); }, -0.5, 2.0);
    const double rhs = a * gk15_integrate(f, -0.5, 2.0) + b * gk15_integrate(g, -0.5, 2.0);
    EXPECT_NEAR(lhs, rhs, 1e-12 * (1 + std::abs(lhs)));
  }
}

TEST(GK15, IntervalAdditivityIsApproximate) {
  const auto f = [](double u) { return std::exp(-u) * std::sin(3 * u) + 2.0; };
  const double whole = gk15_integrate(f, 0.0, 5.0);
  const double split = gk15_integrate(f, 0.0, 2.5) + gk15_integrate(f, 2.5, 5.0);
  EXPECT_LT(std::abs(whole - split), 1e-6);
}

TEST(GK15, PanelsAndDegenerateInterval) {
  EXPECT_EQ(gk15_integrate([](double u) { return u; }, 3.0, 3.0), 0.0);
  const auto f = [](double u) { return std::exp(std::sin(4 * u)); };
  const double one = gk15_integrate(f, 0.0, 20.0);
  const double many = gk15_integrate(f, 0.0, 20.0, 20);
  const double ref = gk15_integrate(f, 0.0, 20.0, 400);
  EXPECT_LT(std::abs(many - ref), std::abs(one - ref));
  EXPECT_NEAR(many, ref, 1e-9);
}

TEST(GK15, Errors) {
  EXPECT_THROW(gk15_integrate([](double) { return 1.0; }, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(gk15_integrate([](double) { return 1.0; }, 0.0, INFINITY), std::invalid_argument);
  EXPECT_THROW(gk15_integrate([](double) { return 1.0; }, 0.0, 1.0, 0), std::invalid_argument);
  try {
    gk15_integrate([](double u) { return u > 0.5 ? INFINITY : 1.0; }, 0.0, 1.0);
    FAIL() << "expected NumericError";
  } catch (const jdm::NumericError& e) {
    EXPECT_GT(e.at(), 0.5);
  }
}
