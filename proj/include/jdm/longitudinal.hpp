#ifndef JDM_LONGITUDINAL_HPP
#define JDM_LONGITUDINAL_HPP

// Longitudinal mean trajectory, residual-variance (dispersion) models and the
// per-subject Gaussian log-likelihood of the repeated measures.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "jdm/distributions.hpp"
#include "jdm/errors.hpp"
#include "jdm/model.hpp"

namespace jdm {

/// Exponents are clamped to [-kExponentClamp, kExponentClamp] before exp().
inline constexpr double kExponentClamp = 50.0;

/// Counts of clamped exponents, surfaced as sampler diagnostics.
struct ClampCounters {
  std::uint64_t dispersion = 0;
  std::uint64_t hazard = 0;

  ClampCounters& operator+=(const ClampCounters& o) {
    dispersion += o.dispersion;
    hazard += o.hazard;
    return *this;
  }
};

inline double clamp_exponent(double x, std::uint64_t* counter) {
  if (x > kExponentClamp || x < -kExponentClamp) {
    if (counter) ++*counter;
    return std::clamp(x, -kExponentClamp, kExponentClamp);
  }
  return x;
}

/// m_i(t) = beta1' (1, t, sex, age, prevoi) + b_{1i,1} + b_{1i,2} t.
inline double mean_trajectory(const Eigen::VectorXd& beta1, double b_intercept, double b_slope,
                              const Subject& s, double t) {
  return beta1[0] + beta1[1] * t + beta1[2] * s.gender + beta1[3] * s.age +
         beta1[4] * s.prevoi + b_intercept + b_slope * t;
}

inline double mean_trajectory(const ParameterState& state, const Subject& s, std::size_t i,
                              double t) {
  return mean_trajectory(state.beta1, state.b(static_cast<Eigen::Index>(i), 0),
                         state.b(static_cast<Eigen::Index>(i), 1), s, t);
}

namespace detail {
inline void check_index(const ParameterState& state, std::size_t i) {
  if (i >= state.n_subjects())
    throw std::invalid_argument("subject index " + std::to_string(i) + " out of range (N = " +
                                std::to_string(state.n_subjects()) + ")");
}
}  // namespace detail

/// log sigma_i, the log residual standard deviation of subject i.
inline double log_residual_sd(const ModelSpec& spec, const ParameterState& state,
                              const Subject& s, std::size_t i, ClampCounters* counters = nullptr) {
  detail::check_index(state, i);
  const auto row = static_cast<Eigen::Index>(i);
  std::uint64_t* counter = counters ? &counters->dispersion : nullptr;
  switch (spec.variance) {
    case VarianceModel::CovariateDispersion: {
      const double eta = state.beta2[0] * s.gender + state.beta2[1] * s.age +
                         state.beta2[2] * s.prevoi + state.b(row, 2);
      return state.log_sigma0 + 0.5 * clamp_exponent(eta, counter);
    }
    case VarianceModel::RandomInterceptDispersion:
      return state.log_sigma0 + 0.5 * clamp_exponent(state.b(row, 2), counter);
    case VarianceModel::Exchangeable:
      return state.log_sigma[row];
    case VarianceModel::Common:
      return state.log_sigma0;
  }
  return state.log_sigma0;
}

/// sigma_i^2 under the chosen variance model.
inline double residual_variance(const ModelSpec& spec, const ParameterState& state,
                                const Subject& s, std::size_t i,
                                ClampCounters* counters = nullptr) {
  return std::exp(2.0 * log_residual_sd(spec, state, s, i, counters));
}

/// sum_j log N(y_ij; m_i(t_ij), sigma_i^2) evaluated at a given log sigma_i.
inline double long_loglik_given_sd(const Subject& s, const Eigen::VectorXd& beta1,
                                   double b_intercept, double b_slope, double log_sd) {
  const double variance = std::exp(2.0 * log_sd);
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw NumericError("residual variance is not a positive finite number");
  double ss = 0.0;
  for (std::size_t j = 0; j < s.n_obs(); ++j) {
    const double r = s.y[j] - mean_trajectory(beta1, b_intercept, b_slope, s, s.times[j]);
    ss += r * r;
  }
  const auto n = static_cast<double>(s.n_obs());
  return -0.5 * n * (dist::kLog2Pi + 2.0 * log_sd) - 0.5 * ss / variance;
}

inline double long_loglik_subject(const Subject& s, const ParameterState& state,
                                  const ModelSpec& spec, std::size_t i,
                                  ClampCounters* counters = nullptr) {
  const double log_sd = log_residual_sd(spec, state, s, i, counters);
  const auto row = static_cast<Eigen::Index>(i);
  return long_loglik_given_sd(s, state.beta1, state.b(row, 0), state.b(row, 1), log_sd);
}

}  // namespace jdm

#endif  // JDM_LONGITUDINAL_HPP
