#ifndef JDM_SIMULATOR_HPP
#define JDM_SIMULATOR_HPP

// Synthetic cohorts drawn from the generative model, with event times
// obtained by inverting each subject's cumulative hazard.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jdm/distributions.hpp"
#include "jdm/model.hpp"
#include "jdm/quadrature.hpp"
#include "jdm/survival.hpp"

namespace jdm {

/// H_i(t) = int_0^t h_i(u) du for one subject.
///
/// [0, t] is cut at every integer and every finite piecewise breakpoint, so a
/// horizon t uses ceil(t) unit panels (more when breakpoints fall inside),
/// each integrated with GK15. The Weibull baseline is integrated in
/// v = u^rho, which removes the singularity of u^(rho-1) at zero.
class CumulativeHazard {
 public:
  CumulativeHazard(const ParameterState& state, const ModelSpec& spec, const SplineSet& splines,
                   const Subject& subject, std::size_t i, double horizon)
      : state_(state), spec_(spec), splines_(splines), terms_(link_terms(state, spec, subject, i)) {
    if (!(horizon >= 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("horizon must be a finite nonnegative time");
    cuts_.push_back(0.0);
    for (double k = 1.0; k < horizon; k += 1.0) cuts_.push_back(k);
    if (spec.baseline == Baseline::Piecewise)
      for (double a : spec.piecewise_grid)
        if (a > 0.0 && a < horizon) cuts_.push_back(a);
    cuts_.push_back(horizon);
    std::sort(cuts_.begin(), cuts_.end());
    cuts_.erase(std::unique(cuts_.begin(), cuts_.end()), cuts_.end());
    cum_.assign(cuts_.size(), 0.0);
    for (std::size_t k = 1; k < cuts_.size(); ++k)
      cum_[k] = cum_[k - 1] + segment(cuts_[k - 1], cuts_[k]);
  }

  double horizon() const { return cuts_.back(); }

  double operator()(double t) const {
    if (!(t >= 0.0 && t <= horizon())) throw std::domain_error("time outside [0, horizon]");
    const std::size_t k = locate(t);
    return cum_[k] + segment(cuts_[k], t);
  }

  /// Smallest T with H(T) = target (to within tol in T); empty when
  /// H(horizon) < target.
  std::optional<double> invert(double target, double tol) const {
    if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (!(target > 0.0)) throw std::invalid_argument("target must be positive");
    if (cum_.back() < target) return std::nullopt;
    // first cut whose cumulative value reaches the target
    const auto it = std::lower_bound(cum_.begin(), cum_.end(), target);
    const std::size_t k = static_cast<std::size_t>(it - cum_.begin()) - 1;
    double lo = cuts_[k], hi = cuts_[k + 1];
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      if (cum_[k] + segment(cuts_[k], mid) < target)
        lo = mid;
      else
        hi = mid;
    }
    return 0.5 * (lo + hi);
  }

 private:
  std::size_t locate(double t) const {
    const auto it = std::upper_bound(cuts_.begin(), cuts_.end(), t);
    const auto k = static_cast<std::size_t>(it - cuts_.begin());
    return std::min(k == 0 ? 0 : k - 1, cuts_.size() - 2);
  }

  double predictor(double u) const {
    return detail::predictor_with(
        terms_, [&](std::size_t l) { return splines_[l].row(u); }, state_, spec_);
  }

  double segment(double a, double b) const {
    if (b <= a) return 0.0;
    switch (spec_.baseline) {
      case Baseline::Weibull: {
        const double r = state_.rho;
        const auto f = [&](double v) { return std::exp(predictor(std::pow(v, 1.0 / r))); };
        return gk15_integrate(f, std::pow(a, r), std::pow(b, r));
      }
      case Baseline::PSpline: {
        const auto f = [&](double u) { return std::exp(splines_[0].row(u).dot(state_.gamma[0]) + predictor(u)); };
        return gk15_integrate(f, a, b);
      }
      case Baseline::Piecewise: {
        const std::size_t k = detail::piecewise_interval(spec_.piecewise_grid, 0.5 * (a + b));
        const double lam = state_.lambda[static_cast<Eigen::Index>(k)];
        const auto f = [&](double u) { return std::exp(predictor(u)); };
        return lam * gk15_integrate(f, a, b);
      }
    }
    return 0.0;
  }

  const ParameterState& state_;
  const ModelSpec& spec_;
  const SplineSet& splines_;
  LinkTerms terms_;
  std::vector<double> cuts_;
  std::vector<double> cum_;
};

inline std::optional<double> invert_survival_time(const ParameterState& state, const ModelSpec& spec,
                                                  const Subject& subject, std::size_t i,
                                                  double target, double t_max, double tol = 1e-10) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  const SplineSet splines(spec);
  return CumulativeHazard(state, spec, splines, subject, i, t_max).invert(target, tol);
}

struct SimulationOptions {
  double p_male = 0.596;
  double p_age50 = 0.12;
  double p_prevoi = 0.396;
  /// Each scheduled exam after the first moves by U(-jitter, jitter).
  double exam_jitter = 0.0;
  /// EXCHANGEABLE truth: when set, log sigma_i ~ N(log sigma_0, sd^2);
  /// otherwise the truth's log_sigma (if sized N) or log sigma_0 is used.
  std::optional<double> exchangeable_log_sigma_sd;
  double tolerance = 1e-10;
};

struct SimulatedCohort {
  Dataset data;
  /// The generating parameters with the drawn random effects (and
  /// per-subject scales) filled in.
  ParameterState truth;
};

inline SimulatedCohort simulate_dataset(const ParameterState& true_state, const ModelSpec& spec,
                                        std::size_t n, const std::vector<double>& exam_schedule,
                                        double censor_time, std::uint64_t seed,
                                        const SimulationOptions& opts = {}) {
  if (auto problems = validate_spec(spec); !problems.empty())
    throw std::invalid_argument("invalid model spec: " + problems.front());
  if (exam_schedule.empty()) throw std::invalid_argument("exam schedule is empty");
  if (n == 0) throw std::invalid_argument("need at least one subject");
  if (!(censor_time > 0.0) || !std::isfinite(censor_time))
    throw std::invalid_argument("censoring time must be positive and finite");
  for (double t : exam_schedule)
    if (!(t >= 0.0 && t <= censor_time))
      throw std::invalid_argument("exam schedule must lie within [0, censor_time]");
  if (!std::is_sorted(exam_schedule.begin(), exam_schedule.end()))
    throw std::invalid_argument("exam schedule must be sorted");
  for (std::size_t l = 0; l < 4; ++l)
    if (spec.uses_spline(l) &&
        (spec.splines[l].t_min > 0.0 || spec.splines[l].t_max < censor_time))
      throw std::invalid_argument("spline g" + std::to_string(l) +
                                  " does not cover [0, censor_time]");

  ParameterState truth = true_state;
  const auto rows = static_cast<Eigen::Index>(n);
  const auto p = static_cast<Eigen::Index>(spec.re_dim());
  if (truth.sigma_inv.rows() != p || truth.sigma_inv.cols() != p)
    throw std::invalid_argument("true Sigma^{-1} must be p x p");
  Eigen::LLT<Eigen::MatrixXd> llt_prec(truth.sigma_inv);
  if (llt_prec.info() != Eigen::Success) throw std::invalid_argument("true Sigma^{-1} must be SPD");
  const Eigen::MatrixXd sigma = llt_prec.solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd chol = sigma.llt().matrixL();

  const bool keep_log_sigma = truth.log_sigma.size() == rows;
  truth.b = Eigen::MatrixXd::Zero(rows, p);
  if (spec.per_subject_sigma() && !keep_log_sigma)
    truth.log_sigma = Eigen::VectorXd::Constant(rows, truth.log_sigma0);
  if (!spec.per_subject_sigma()) truth.log_sigma.resize(0);
  check_state(truth, spec, n);

  const SplineSet splines(spec);
  std::vector<Subject> subjects(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i >> 32)};
    std::mt19937_64 rng(seq);
    const auto row = static_cast<Eigen::Index>(i);
    Subject& s = subjects[i];
    s.id = "S" + std::to_string(i + 1);
    s.gender = dist::draw_uniform(rng) < opts.p_male ? 1 : 0;
    s.age = dist::draw_uniform(rng) < opts.p_age50 ? 1 : 0;
    s.prevoi = dist::draw_uniform(rng) < opts.p_prevoi ? 1 : 0;
    truth.b.row(row) = (chol * dist::draw_std_normal(rng, p)).transpose();
    if (spec.per_subject_sigma() && opts.exchangeable_log_sigma_sd)
      truth.log_sigma[row] = truth.log_sigma0 + *opts.exchangeable_log_sigma_sd * dist::draw_normal(rng);

    std::vector<double> times = exam_schedule;
    for (std::size_t j = 1; j < times.size(); ++j)
      if (opts.exam_jitter > 0.0)
        times[j] = std::clamp(times[j] + opts.exam_jitter * (2.0 * dist::draw_uniform(rng) - 1.0),
                              0.0, censor_time);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    const double sd = std::exp(log_residual_sd(spec, truth, s, i));
    std::vector<double> ys;
    for (double t : times) ys.push_back(mean_trajectory(truth, s, i, t) + sd * dist::draw_normal(rng));

    const double target = -std::log1p(-dist::draw_uniform(rng));  // Exp(1)
    const CumulativeHazard cum(truth, spec, splines, s, i, censor_time);
    const auto t_event = target > 0.0 ? cum.invert(target, opts.tolerance) : std::optional<double>(0.0);
    s.event = t_event.has_value() ? 1 : 0;
    s.event_time = t_event.value_or(censor_time);

    for (std::size_t j = 0; j < times.size(); ++j) {
      if (j > 0 && times[j] > s.event_time) break;
      s.times.push_back(times[j]);
      s.y.push_back(ys[j]);
    }
  }
  return {Dataset(std::move(subjects)), std::move(truth)};
}

/// A plausible generating state for `spec` (CD4-like scale, constant
/// time-varying coefficients), sized for `n` subjects.
inline ParameterState example_truth(const ModelSpec& spec, std::size_t n = 0) {
  ParameterState s = make_state(spec, n);
  s.beta1 << 17.26, 1.74, -0.66, -1.34, -1.62;
  if (spec.has_beta2()) s.beta2 << 0.1, 0.3, 0.2;
  s.beta3 << 0.49, 0.93, 0.95;
  const auto p = static_cast<Eigen::Index>(spec.re_dim());
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
  sigma.topLeftCorner(2, 2) << 4.0, -0.5, -0.5, 1.0;
  if (p == 3) sigma(2, 2) = 0.25;
  s.sigma_inv = sigma.inverse();
  s.log_sigma0 = std::log(2.59);
  if (spec.per_subject_sigma()) s.log_sigma.setConstant(s.log_sigma0);
  const std::array<double, 4> level{std::log(0.1), -0.2, -0.5, 0.3};
  for (std::size_t l = 0; l < 4; ++l)
    if (spec.uses_spline(l)) s.gamma[l].setConstant(level[l]);
  if (spec.baseline == Baseline::Piecewise) s.lambda.setConstant(0.1);
  if (spec.baseline == Baseline::Weibull) s.rho = 1.0;
  if (spec.linking == Linking::ConstantTraditional) {
    s.g1_const = -0.21;
    s.g2_const = -0.54;
  }
  return s;
}

}  // namespace jdm

#endif  // JDM_SIMULATOR_HPP
