#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jdm/longitudinal.hpp"

using namespace jdm;

namespace {
ModelSpec spec_with(VarianceModel v) {
  ModelSpec s;
  s.variance = v;
  s.linking = Linking::SlopesOnly;
  return s;
}

Subject person(int male, int old, int prevoi, std::vector<double> t, std::vector<double> y) {
  Subject s;
  s.id = "p";
  s.gender = male;
  s.age = old;
  s.prevoi = prevoi;
  s.times = std::move(t);
  s.y = std::move(y);
  s.event_time = 5.0;
  return s;
}

// log of a product of Gaussian densities, computed as a product first
double density_product_log(const std::vector<double>& y, const std::vector<double>& m, double var) {
  double prod = 1.0;
  for (std::size_t j = 0; j < y.size(); ++j)
    prod *= std::exp(-(y[j] - m[j]) * (y[j] - m[j]) / (2 * var)) / std::sqrt(2 * M_PI * var);
  return std::log(prod);
}
}  // namespace

TEST(MeanTrajectory, Examples) {
  Eigen::VectorXd beta(5);
  beta << 17.26, 1.74, -0.66, -1.34, -1.62;
  const auto s = person(1, 1, 1, {0}, {0});
  EXPECT_NEAR(mean_trajectory(beta, 0, 0, s, 0.0), 13.64, 1e-12);
  EXPECT_EQ(mean_trajectory(Eigen::VectorXd::Zero(5), 0, 0, s, 3.0), 0.0);
  EXPECT_NEAR(mean_trajectory(beta, 0.3, -0.2, s, 1.0) - mean_trajectory(beta, 0.3, -0.2, s, 0.0),
              1.74 - 0.2, 1e-12);
}

TEST(ResidualVariance, FourVariants) {
  const auto s = person(1, 0, 0, {0}, {0});
  {
    const auto spec = spec_with(VarianceModel::CovariateDispersion);
    auto st = make_state(spec, 1);
    st.log_sigma0 = 0.0;
    st.beta2 << std::log(2.0), 0, 0;
    EXPECT_NEAR(residual_variance(spec, st, s, 0), 2.0, 1e-14);
    st.beta2.setZero();
    st.log_sigma0 = std::log(1.3);
    EXPECT_NEAR(residual_variance(spec, st, s, 0), 1.69, 1e-13);  // eta = 0 gives sigma0^2
  }
  {
    const auto spec = spec_with(VarianceModel::RandomInterceptDispersion);
    auto st = make_state(spec, 1);
    st.b(0, 2) = std::log(3.0);
    EXPECT_NEAR(residual_variance(spec, st, s, 0), 3.0, 1e-14);
  }
  {
    const auto spec = spec_with(VarianceModel::Common);
    auto st = make_state(spec, 1);
    st.log_sigma0 = std::log(2.59);
    EXPECT_NEAR(residual_variance(spec, st, s, 0), 6.7081, 1e-12);
    EXPECT_THROW(residual_variance(spec, st, s, 1), std::invalid_argument);
  }
  {
    const auto spec = spec_with(VarianceModel::Exchangeable);
    auto st = make_state(spec, 2);
    st.log_sigma << 0.1, -0.4;
    EXPECT_NEAR(residual_variance(spec, st, s, 1), std::exp(-0.8), 1e-15);
  }
}

TEST(ResidualVariance, ExponentClampIsCounted) {
  const auto spec = spec_with(VarianceModel::RandomInterceptDispersion);
  auto st = make_state(spec, 1);
  st.b(0, 2) = 80.0;
  ClampCounters c;
  EXPECT_NEAR(residual_variance(spec, st, person(0, 0, 0, {0}, {0}), 0, &c), std::exp(50.0), 1e-6 * std::exp(50.0));
  EXPECT_EQ(c.dispersion, 1u);
}

TEST(LongLoglik, Examples) {
  const auto spec = spec_with(VarianceModel::Common);
  auto st = make_state(spec, 1);
  st.beta1 << 3, 0, 0, 0, 0;
  const auto one = person(0, 0, 0, {0.0}, {3.0});
  EXPECT_NEAR(long_loglik_subject(one, st, spec, 0), -0.5 * std::log(2 * M_PI), 1e-15);
  EXPECT_NEAR(long_loglik_subject(one, st, spec, 0), -0.918939, 1e-6);

  const auto a = person(0, 0, 0, {0.0}, {2.2});
  const auto b = person(0, 0, 0, {1.0}, {4.1});
  const auto ab = person(0, 0, 0, {0.0, 1.0}, {2.2, 4.1});
  EXPECT_NEAR(long_loglik_subject(ab, st, spec, 0),
              long_loglik_subject(a, st, spec, 0) + long_loglik_subject(b, st, spec, 0), 1e-14);
}

TEST(LongLoglik, MatchesDensityProduct) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0, 5);
  const auto spec = spec_with(VarianceModel::Common);
  for (int r = 0; r < 200; ++r) {
    auto st = make_state(spec, 1);
    for (auto& x : st.beta1) x = z(rng);
    st.b(0, 0) = z(rng);
    st.b(0, 1) = z(rng);
    st.log_sigma0 = 0.3 * z(rng);
    std::vector<double> t, y, m;
    const int n = 1 + r % 6;
    double time = 0;
    for (int j = 0; j < n; ++j) {
      time += u(rng) / 3;
      t.push_back(time);
    }
    const auto s0 = person(r % 2, (r / 2) % 2, (r / 4) % 2, t, std::vector<double>(n, 0.0));
    for (int j = 0; j < n; ++j) {
      m.push_back(mean_trajectory(st, s0, 0, t[j]));
      y.push_back(m.back() + std::exp(st.log_sigma0) * z(rng));
    }
    const auto s = person(r % 2, (r / 2) % 2, (r / 4) % 2, t, y);
    EXPECT_NEAR(long_loglik_subject(s, st, spec, 0),
                density_product_log(y, m, std::exp(2 * st.log_sigma0)), 1e-10);
  }
}

TEST(LongLoglik, LocationInvarianceAndVariantAgreement) {
  const auto common = spec_with(VarianceModel::Common);
  const auto exch = spec_with(VarianceModel::Exchangeable);
  auto st = make_state(common, 1);
  st.beta1 << 10, 1, -1, 0.5, 0.2;
  st.log_sigma0 = 0.7;
  const auto s = person(1, 0, 1, {0, 1, 2}, {9.5, 11.2, 10.4});
  const double base = long_loglik_subject(s, st, common, 0);
  auto shifted_state = st;
  shifted_state.beta1[0] += 4.25;
  const auto shifted = person(1, 0, 1, {0, 1, 2}, {13.75, 15.45, 14.65});
  EXPECT_NEAR(long_loglik_subject(shifted, shifted_state, common, 0), base, 1e-12);

  auto ex = make_state(exch, 1);
  ex.beta1 = st.beta1;
  ex.log_sigma[0] = 0.7;
  EXPECT_EQ(long_loglik_subject(s, ex, exch, 0), base);
}

TEST(LongLoglik, UnimodalInVariance) {
  const auto spec = spec_with(VarianceModel::Common);
  auto st = make_state(spec, 1);
  const auto s = person(0, 0, 0, {0, 1, 2, 3}, {1.0, -2.0, 0.5, 3.0});
  const double msr = (1.0 + 4.0 + 0.25 + 9.0) / 4.0;
  double prev = -INFINITY;
  for (double v = 0.2; v < msr; v += 0.05) {
    st.log_sigma0 = 0.5 * std::log(v);
    const double ll = long_loglik_subject(s, st, spec, 0);
    EXPECT_GT(ll, prev);
    prev = ll;
  }
  prev = -INFINITY;
  for (double v = 30.0; v > msr; v -= 0.05) {
    st.log_sigma0 = 0.5 * std::log(v);
    const double ll = long_loglik_subject(s, st, spec, 0);
    EXPECT_GT(ll, prev);
    prev = ll;
  }
}

TEST(LongLoglik, NonPositiveVarianceIsNumericError) {
  const auto spec = spec_with(VarianceModel::Common);
  auto st = make_state(spec, 1);
  st.log_sigma0 = -400;
  EXPECT_THROW(long_loglik_subject(person(0, 0, 0, {0}, {1}), st, spec, 0), NumericError);
}
