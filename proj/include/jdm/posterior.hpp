#ifndef JDM_POSTERIOR_HPP
#define JDM_POSTERIOR_HPP

// Joint log prior and log posterior.
//
// Every prior density is evaluated on the scale its distribution is stated
// on: beta, b_i, Sigma^{-1}, gamma_l, 1/tau_l^2, lambda_k and rho directly;
// the residual-scale parameter on log(sigma) (LOG_UNIFORM), on 1/sigma^2
// (INV_GAMMA) or on sigma together with the half-Cauchy scale (HALF_CAUCHY).
// Samplers that move on another scale add the Jacobian themselves.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "jdm/distributions.hpp"
#include "jdm/longitudinal.hpp"
#include "jdm/model.hpp"
#include "jdm/spline_basis.hpp"
#include "jdm/survival.hpp"

namespace jdm {

/// Prior log density of one residual-scale parameter given its log sd.
inline double log_sigma_prior(double log_sd, const PriorConfig& p, double hc_scale) {
  switch (p.sigma_prior) {
    case SigmaPrior::LogUniform:
      return dist::uniform_logpdf(log_sd, -p.log_uniform_bound, p.log_uniform_bound);
    case SigmaPrior::InvGamma: {
      // Gamma(eps, eps) density of the precision phi = exp(-2 log_sd).
      const double log_phi = -2.0 * log_sd;
      const double e = p.inv_gamma_eps;
      return e * std::log(e) - std::lgamma(e) + (e - 1.0) * log_phi - e * std::exp(log_phi);
    }
    case SigmaPrior::HalfCauchy:
      return dist::half_cauchy_logpdf(std::exp(log_sd), hc_scale);
  }
  return dist::kNegInf;
}

/// log |d(prior scale) / d(log sd)| for the residual-scale parameter.
inline double log_sigma_jacobian(double log_sd, SigmaPrior prior) {
  switch (prior) {
    case SigmaPrior::LogUniform: return 0.0;
    case SigmaPrior::InvGamma: return std::log(2.0) - 2.0 * log_sd;
    case SigmaPrior::HalfCauchy: return log_sd;
  }
  return 0.0;
}

inline Eigen::MatrixXd wishart_matrix(const ModelSpec& spec) {
  const auto p = static_cast<Eigen::Index>(spec.re_dim());
  return Eigen::MatrixXd::Identity(p, p) * spec.priors.wishart_scale;
}

inline double log_det_spd(const Eigen::MatrixXd& m) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return dist::kNegInf;
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

/// log N_p(b_i; 0, Sigma) summed over subjects.
inline double log_random_effects_prior(const ParameterState& s) {
  const double logdet = log_det_spd(s.sigma_inv);
  if (!std::isfinite(logdet)) return dist::kNegInf;
  double out = 0.0;
  for (Eigen::Index i = 0; i < s.b.rows(); ++i)
    out += dist::mvn_logpdf_precision(s.b.row(i).transpose(), s.sigma_inv, logdet);
  return out;
}

inline double log_prior(const ParameterState& s, const ModelSpec& spec) {
  const auto& p = spec.priors;
  double lp = 0.0;
  const auto gaussian = [&](const Eigen::VectorXd& v, double variance) {
    for (Eigen::Index k = 0; k < v.size(); ++k) lp += dist::normal_logpdf(v[k], 0.0, variance);
  };
  gaussian(s.beta1, p.beta_variance);
  gaussian(s.beta2, p.beta_variance);
  gaussian(s.beta3, p.beta_variance);
  if (spec.linking == Linking::ConstantTraditional) {
    lp += dist::normal_logpdf(s.g1_const, 0.0, p.link_const_variance);
    lp += dist::normal_logpdf(s.g2_const, 0.0, p.link_const_variance);
  }

  lp += dist::wishart_logpdf(s.sigma_inv, wishart_matrix(spec), p.wishart_df);
  if (!std::isfinite(lp)) return dist::kNegInf;
  lp += log_random_effects_prior(s);

  for (std::size_t l = 0; l < 4; ++l) {
    if (!spec.uses_spline(l)) continue;
    if (!(s.tau2[l] > 0.0)) return dist::kNegInf;
    lp += log_rw1_prior(s.gamma[l], s.tau2[l], p.first_coef_variance);
    lp += dist::gamma_logpdf(1.0 / s.tau2[l], p.smooth.shape, p.smooth.rate);
  }

  if (spec.baseline == Baseline::Piecewise)
    for (Eigen::Index k = 0; k < s.lambda.size(); ++k)
      lp += dist::gamma_logpdf(s.lambda[k], p.lambda.shape, p.lambda.rate);
  if (spec.baseline == Baseline::Weibull) lp += dist::gamma_logpdf(s.rho, p.rho.shape, p.rho.rate);

  if (p.sigma_prior == SigmaPrior::HalfCauchy)
    lp += dist::uniform_logpdf(s.hc_scale, 0.0, p.half_cauchy_upper);
  if (!std::isfinite(lp)) return dist::kNegInf;
  if (spec.per_subject_sigma()) {
    for (Eigen::Index i = 0; i < s.log_sigma.size(); ++i)
      lp += log_sigma_prior(s.log_sigma[i], p, s.hc_scale);
  } else {
    lp += log_sigma_prior(s.log_sigma0, p, s.hc_scale);
  }
  return std::isfinite(lp) ? lp : dist::kNegInf;
}

/// log f(D_i | theta) for every subject: longitudinal plus survival part.
inline std::vector<double> pointwise_loglik(const ParameterState& s, const Dataset& data,
                                            const ModelSpec& spec,
                                            ClampCounters* counters = nullptr) {
  const SplineSet splines(spec);
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    out[i] = long_loglik_subject(data[i], s, spec, i, counters) +
             surv_loglik_subject(data[i], s, spec, splines, i, counters);
  return out;
}

inline double log_likelihood(const ParameterState& s, const Dataset& data, const ModelSpec& spec) {
  double total = 0.0;
  for (double v : pointwise_loglik(s, data, spec)) total += v;
  return total;
}

inline double log_posterior(const ParameterState& s, const Dataset& data, const ModelSpec& spec) {
  const double lp = log_prior(s, spec);
  if (!std::isfinite(lp)) return lp;
  return lp + log_likelihood(s, data, spec);
}

}  // namespace jdm

#endif  // JDM_POSTERIOR_HPP
