#ifndef JDM_SURVIVAL_HPP
#define JDM_SURVIVAL_HPP

// Linking predictor, baseline hazards and per-subject survival
// log-likelihoods for the Weibull, log-P-spline and piecewise-constant
// baselines.
//
// The Weibull and piecewise contributions evaluate exp(rho_i(T_i)) at the
// event time only; the P-spline contribution integrates the full
// time-varying hazard exp(g0(u) + rho_i(u)) over [0, T_i] with the 15-point
// Gauss-Kronrod rule.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "jdm/errors.hpp"
#include "jdm/longitudinal.hpp"
#include "jdm/model.hpp"
#include "jdm/quadrature.hpp"
#include "jdm/spline_basis.hpp"

namespace jdm {

/// The bases of g0..g3 that a spec uses.
class SplineSet {
 public:
  SplineSet() = default;
  explicit SplineSet(const ModelSpec& spec) {
    for (std::size_t l = 0; l < 4; ++l)
      if (spec.uses_spline(l)) {
        const auto& c = spec.splines[l];
        bases_[l].emplace(c.t_min, c.t_max, c.intervals);
      }
  }

  bool has(std::size_t l) const { return bases_[l].has_value(); }
  const SplineBasis& operator[](std::size_t l) const {
    if (!bases_[l]) throw std::invalid_argument("spline g" + std::to_string(l) + " not in model");
    return *bases_[l];
  }

 private:
  std::array<std::optional<SplineBasis>, 4> bases_;
};

/// Subject-level coefficients of the linking predictor:
/// rho_i(t) = offset + sum_{l=1..3} load[l] * g_l(t).
struct LinkTerms {
  double offset = 0.0;
  std::array<double, 4> load{};  // load[0] is unused
};

inline LinkTerms link_terms(const ParameterState& state, const ModelSpec& spec, const Subject& s,
                            std::size_t i, ClampCounters* counters = nullptr) {
  detail::check_index(state, i);
  const auto row = static_cast<Eigen::Index>(i);
  LinkTerms t;
  t.offset = state.beta3[0] * s.gender + state.beta3[1] * s.age + state.beta3[2] * s.prevoi;
  const double b11 = state.b(row, 0);
  const double b12 = state.b(row, 1);
  switch (spec.linking) {
    case Linking::SharedB2:
      t.load = {0.0, b11, b12, state.b(row, 2)};
      break;
    case Linking::SharedSigma:
      t.load = {0.0, b11, b12, std::exp(log_residual_sd(spec, state, s, i, counters))};
      break;
    case Linking::SlopesOnly:
      t.load = {0.0, b11, b12, 0.0};
      break;
    case Linking::ConstantTraditional:
      t.offset += state.g1_const * b11 + state.g2_const * b12;
      break;
  }
  return t;
}

/// Basis rows a subject needs: at the event time and, for the P-spline
/// baseline, at the 15 quadrature nodes on [0, T_i].
struct SurvivalRows {
  double event_time = 0.0;
  std::array<BasisRow, 4> at_event{};
  std::array<std::array<BasisRow, 15>, 4> at_nodes{};
};

inline SurvivalRows make_survival_rows(const SplineSet& splines, const ModelSpec& spec,
                                       double event_time) {
  SurvivalRows r;
  r.event_time = event_time;
  for (std::size_t l = 0; l < 4; ++l) {
    if (!spec.uses_spline(l)) continue;
    r.at_event[l] = splines[l].row(event_time);
    if (spec.baseline == Baseline::PSpline)
      for (std::size_t j = 0; j < 15; ++j)
        r.at_nodes[l][j] = splines[l].row(GK15Rule::abscissa(j, 0.0, event_time));
  }
  return r;
}

namespace detail {

template <typename RowAt>
double predictor_with(const LinkTerms& terms, RowAt&& row_at, const ParameterState& state,
                      const ModelSpec& spec) {
  double v = terms.offset;
  if (spec.time_varying_links()) {
    v += terms.load[1] * row_at(1).dot(state.gamma[1]) + terms.load[2] * row_at(2).dot(state.gamma[2]);
    if (spec.has_g3()) v += terms.load[3] * row_at(3).dot(state.gamma[3]);
  }
  return v;
}

inline double predictor_from_rows(const LinkTerms& terms, const std::array<BasisRow, 4>& rows,
                                  const ParameterState& state, const ModelSpec& spec) {
  return predictor_with(
      terms, [&](std::size_t l) -> const BasisRow& { return rows[l]; }, state, spec);
}

/// Index k (0-based) of the interval [a_k, a_{k+1}) containing t.
inline std::size_t piecewise_interval(const std::vector<double>& grid, double t) {
  if (grid.size() < 2) throw std::invalid_argument("piecewise grid needs two breakpoints");
  if (t < grid.front()) throw std::domain_error("time before the start of the piecewise grid");
  if (!(t < grid.back()))
    throw std::invalid_argument("time " + std::to_string(t) +
                                " lies beyond the last piecewise breakpoint");
  const auto it = std::upper_bound(grid.begin(), grid.end(), t);
  return static_cast<std::size_t>(it - grid.begin()) - 1;
}

}  // namespace detail

inline double linking_predictor(const ParameterState& state, const ModelSpec& spec,
                                const SplineSet& splines, const Subject& s, std::size_t i,
                                double t) {
  const LinkTerms terms = link_terms(state, spec, s, i);
  return detail::predictor_with(
      terms, [&](std::size_t l) { return splines[l].row(t); }, state, spec);
}

inline double linking_predictor(const ParameterState& state, const ModelSpec& spec,
                                const Subject& s, std::size_t i, double t) {
  return linking_predictor(state, spec, SplineSet(spec), s, i, t);
}

inline double log_baseline_hazard(const ParameterState& state, const ModelSpec& spec,
                                  const SplineSet& splines, double t) {
  switch (spec.baseline) {
    case Baseline::Weibull:
      if (state.rho == 1.0) return 0.0;
      if (!(t > 0.0))
        throw std::domain_error("Weibull log hazard undefined at t <= 0 unless rho = 1");
      return std::log(state.rho) + (state.rho - 1.0) * std::log(t);
    case Baseline::PSpline:
      return splines[0].row(t).dot(state.gamma[0]);
    case Baseline::Piecewise:
      return std::log(state.lambda[static_cast<Eigen::Index>(
          detail::piecewise_interval(spec.piecewise_grid, t))]);
  }
  return 0.0;
}

inline double log_baseline_hazard(const ParameterState& state, const ModelSpec& spec, double t) {
  return log_baseline_hazard(state, spec, SplineSet(spec), t);
}

/// log h_i(t) = log h0(t) + rho_i(t): the generative hazard of subject i.
inline double log_hazard(const ParameterState& state, const ModelSpec& spec,
                         const SplineSet& splines, const Subject& s, std::size_t i, double t) {
  return log_baseline_hazard(state, spec, splines, t) +
         linking_predictor(state, spec, splines, s, i, t);
}

/// Survival log-likelihood from precomputed link terms and basis rows.
inline double surv_loglik_cached(const Subject& s, const ParameterState& state,
                                 const ModelSpec& spec, const LinkTerms& terms,
                                 const SurvivalRows& rows, ClampCounters* counters = nullptr) {
  std::uint64_t* counter = counters ? &counters->hazard : nullptr;
  const double t_event = s.event_time;
  const double event = static_cast<double>(s.event);
  const double rho_t = detail::predictor_from_rows(terms, rows.at_event, state, spec);
  switch (spec.baseline) {
    case Baseline::Weibull: {
      const double shape = state.rho;
      if (!(t_event > 0.0)) {
        if (shape != 1.0) throw std::domain_error("Weibull contribution needs T_i > 0");
        return event * clamp_exponent(rho_t, event > 0.0 ? counter : nullptr);
      }
      const double log_t = std::log(t_event);
      const double rho_c = clamp_exponent(rho_t, counter);
      const double log_h = std::log(shape) + (shape - 1.0) * log_t + rho_c;
      const double cum = std::exp(rho_c + shape * log_t);
      return event * log_h - cum;
    }
    case Baseline::PSpline: {
      const double g0_t = rows.at_event[0].dot(state.gamma[0]);
      const double half = 0.5 * t_event;
      double sum = 0.0;
      for (std::size_t j = 0; j < 15; ++j) {
        const double eta =
            rows.at_nodes[0][j].dot(state.gamma[0]) +
            detail::predictor_with(
                terms, [&](std::size_t l) -> const BasisRow& { return rows.at_nodes[l][j]; },
                state, spec);
        sum += GK15Rule::weights[j] * std::exp(clamp_exponent(eta, counter));
      }
      const double cum = half * sum;
      if (!std::isfinite(cum)) throw NumericError("cumulative hazard overflow", t_event);
      const double log_h = s.event ? clamp_exponent(g0_t + rho_t, counter) : 0.0;
      return event * log_h - cum;
    }
    case Baseline::Piecewise: {
      const auto& a = spec.piecewise_grid;
      const std::size_t k = detail::piecewise_interval(a, t_event);
      double exposure = 0.0;
      for (std::size_t m = 0; m < k; ++m)
        exposure += state.lambda[static_cast<Eigen::Index>(m)] * (a[m + 1] - a[m]);
      const double lam = state.lambda[static_cast<Eigen::Index>(k)];
      exposure += lam * (t_event - a[k]);
      const double rho_c = clamp_exponent(rho_t, counter);
      return event * (std::log(lam) + rho_c) - exposure * std::exp(rho_c);
    }
  }
  return 0.0;
}

inline double surv_loglik_subject(const Subject& s, const ParameterState& state,
                                  const ModelSpec& spec, const SplineSet& splines, std::size_t i,
                                  ClampCounters* counters = nullptr) {
  const LinkTerms terms = link_terms(state, spec, s, i, counters);
  return surv_loglik_cached(s, state, spec, terms,
                            make_survival_rows(splines, spec, s.event_time), counters);
}

inline double surv_loglik_subject(const Subject& s, const ParameterState& state,
                                  const ModelSpec& spec, std::size_t i,
                                  ClampCounters* counters = nullptr) {
  return surv_loglik_subject(s, state, spec, SplineSet(spec), i, counters);
}

namespace detail {
inline void require_baseline(const ModelSpec& spec, Baseline b) {
  if (spec.baseline != b)
    throw std::invalid_argument("spec baseline is " + std::string(to_string(spec.baseline)) +
                                ", not " + std::string(to_string(b)));
}
}  // namespace detail

inline double surv_loglik_weibull(const Subject& s, const ParameterState& state,
                                  const ModelSpec& spec, std::size_t i) {
  detail::require_baseline(spec, Baseline::Weibull);
  return surv_loglik_subject(s, state, spec, i);
}

inline double surv_loglik_pspline(const Subject& s, const ParameterState& state,
                                  const ModelSpec& spec, std::size_t i) {
  detail::require_baseline(spec, Baseline::PSpline);
  return surv_loglik_subject(s, state, spec, i);
}

inline double surv_loglik_piecewise(const Subject& s, const ParameterState& state,
                                    const ModelSpec& spec, std::size_t i) {
  detail::require_baseline(spec, Baseline::Piecewise);
  return surv_loglik_subject(s, state, spec, i);
}

/// exp(g3(t)): hazard ratio per unit increase of the quantity linked through g3.
inline double hazard_ratio(const ParameterState& state, const ModelSpec& spec,
                           const SplineSet& splines, double t) {
  if (!spec.has_g3()) throw std::invalid_argument("model " + spec.label() + " has no g3");
  return std::exp(splines[3].row(t).dot(state.gamma[3]));
}

inline double hazard_ratio(const ParameterState& state, const ModelSpec& spec, double t) {
  return hazard_ratio(state, spec, SplineSet(spec), t);
}

}  // namespace jdm

#endif  // JDM_SURVIVAL_HPP
