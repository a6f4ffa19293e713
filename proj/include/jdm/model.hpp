#ifndef JDM_MODEL_HPP
#define JDM_MODEL_HPP

// Data model: subjects, datasets, the model-specification lattice, prior
// hyperparameters and the full parameter state of a joint dispersion model.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "jdm/spline_basis.hpp"

namespace jdm {

// ---------------------------------------------------------------------------
// Data

struct Subject {
  std::string id;
  std::vector<double> times;  // exam times (years), nondecreasing
  std::vector<double> y;      // sqrt(CD4) measurements
  double event_time = 0.0;    // T_i (years)
  int event = 0;              // delta_i
  int gender = 0;             // 1 = male
  int age = 0;                // 1 = aged 50 or over
  int prevoi = 0;             // 1 = previous opportunistic infection

  std::size_t n_obs() const noexcept { return y.size(); }
  std::array<double, 3> covariates() const {
    return {static_cast<double>(gender), static_cast<double>(age),
            static_cast<double>(prevoi)};
  }

  friend bool operator==(const Subject&, const Subject&) = default;
};

/// Throws std::invalid_argument describing the first broken invariant.
inline void validate_subject(const Subject& s) {
  const auto fail = [&](const std::string& why) {
    throw std::invalid_argument("subject '" + s.id + "': " + why);
  };
  if (s.id.empty()) throw std::invalid_argument("subject with empty id");
  if (s.y.empty()) fail("needs at least one measurement");
  if (s.y.size() != s.times.size()) fail("times and measurements differ in length");
  for (std::size_t j = 0; j < s.times.size(); ++j) {
    if (!std::isfinite(s.times[j]) || s.times[j] < 0.0) fail("exam times must be finite and >= 0");
    if (!std::isfinite(s.y[j])) fail("measurements must be finite");
    if (j > 0 && s.times[j] < s.times[j - 1]) fail("exam times must be nondecreasing");
  }
  if (!std::isfinite(s.event_time) || s.event_time < 0.0) fail("event time must be finite and >= 0");
  const auto binary = [](int v) { return v == 0 || v == 1; };
  if (!binary(s.event)) fail("event indicator must be 0 or 1");
  if (!binary(s.gender) || !binary(s.age) || !binary(s.prevoi))
    fail("covariates must be coded 0/1");
}

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<Subject> subjects) : subjects_(std::move(subjects)) {
    if (subjects_.empty()) throw std::invalid_argument("dataset needs at least one subject");
    std::unordered_set<std::string> ids;
    for (const auto& s : subjects_) {
      validate_subject(s);
      if (!ids.insert(s.id).second)
        throw std::invalid_argument("duplicate subject id '" + s.id + "'");
    }
  }

  std::size_t size() const noexcept { return subjects_.size(); }
  bool empty() const noexcept { return subjects_.empty(); }
  const Subject& operator[](std::size_t i) const { return subjects_[i]; }
  const std::vector<Subject>& subjects() const noexcept { return subjects_; }
  auto begin() const { return subjects_.begin(); }
  auto end() const { return subjects_.end(); }

  std::size_t total_observations() const {
    std::size_t n = 0;
    for (const auto& s : subjects_) n += s.n_obs();
    return n;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<Subject> subjects_;
};

// ---------------------------------------------------------------------------
// Model specification

enum class VarianceModel { CovariateDispersion, RandomInterceptDispersion, Exchangeable, Common };
enum class Linking { SharedB2, SharedSigma, SlopesOnly, ConstantTraditional };
enum class Baseline { Weibull, PSpline, Piecewise };
enum class SigmaPrior { LogUniform, InvGamma, HalfCauchy };

inline constexpr std::array<VarianceModel, 4> kVarianceModels{
    VarianceModel::CovariateDispersion, VarianceModel::RandomInterceptDispersion,
    VarianceModel::Exchangeable, VarianceModel::Common};
inline constexpr std::array<Linking, 4> kLinkings{
    Linking::SharedB2, Linking::SharedSigma, Linking::SlopesOnly,
    Linking::ConstantTraditional};
inline constexpr std::array<Baseline, 3> kBaselines{Baseline::Weibull, Baseline::PSpline,
                                                    Baseline::Piecewise};

inline std::string_view to_string(VarianceModel v) {
  switch (v) {
    case VarianceModel::CovariateDispersion: return "COVARIATE_DISPERSION";
    case VarianceModel::RandomInterceptDispersion: return "RANDOM_INTERCEPT_DISPERSION";
    case VarianceModel::Exchangeable: return "EXCHANGEABLE";
    case VarianceModel::Common: return "COMMON";
  }
  return "?";
}
inline std::string_view to_string(Linking l) {
  switch (l) {
    case Linking::SharedB2: return "SHARED_B2";
    case Linking::SharedSigma: return "SHARED_SIGMA";
    case Linking::SlopesOnly: return "SLOPES_ONLY";
    case Linking::ConstantTraditional: return "CONSTANT_TRADITIONAL";
  }
  return "?";
}
inline std::string_view to_string(Baseline b) {
  switch (b) {
    case Baseline::Weibull: return "WEIBULL";
    case Baseline::PSpline: return "PSPLINE";
    case Baseline::Piecewise: return "PIECEWISE";
  }
  return "?";
}
inline std::string_view to_string(SigmaPrior p) {
  switch (p) {
    case SigmaPrior::LogUniform: return "LOG_UNIFORM";
    case SigmaPrior::InvGamma: return "INV_GAMMA";
    case SigmaPrior::HalfCauchy: return "HALF_CAUCHY";
  }
  return "?";
}

template <typename Enum, std::size_t N>
std::optional<Enum> enum_from_name(std::string_view name, const std::array<Enum, N>& all) {
  for (Enum e : all)
    if (to_string(e) == name) return e;
  return std::nullopt;
}

inline std::optional<VarianceModel> parse_variance_model(std::string_view s) {
  return enum_from_name(s, kVarianceModels);
}
inline std::optional<Linking> parse_linking(std::string_view s) {
  return enum_from_name(s, kLinkings);
}
inline std::optional<Baseline> parse_baseline(std::string_view s) {
  return enum_from_name(s, kBaselines);
}
inline std::optional<SigmaPrior> parse_sigma_prior(std::string_view s) {
  return enum_from_name(s, std::array{SigmaPrior::LogUniform, SigmaPrior::InvGamma,
                                      SigmaPrior::HalfCauchy});
}

/// Gamma hyperparameters in the shape-rate convention.
struct GammaPrior {
  double shape = 0.001;
  double rate = 0.001;
  friend bool operator==(const GammaPrior&, const GammaPrior&) = default;
};

struct PriorConfig {
  double beta_variance = 100.0;
  /// Diagonal of the Wishart matrix R; Sigma^{-1} ~ Wish(R, df) with mean df * R^{-1}.
  double wishart_scale = 100.0;
  /// Rule of thumb: number of subjects / 20.
  double wishart_df = 25.0;
  GammaPrior smooth{0.001, 0.001};   // on 1/tau_l^2
  GammaPrior lambda{0.001, 0.001};   // on each piecewise hazard level
  GammaPrior rho{0.01, 0.01};        // on the Weibull shape
  SigmaPrior sigma_prior = SigmaPrior::LogUniform;
  double log_uniform_bound = 100.0;  // log(sigma) ~ U(-A, A)
  double inv_gamma_eps = 0.001;      // 1/sigma^2 ~ Gamma(eps, eps)
  double half_cauchy_upper = 100.0;  // sigma | s ~ half-Cauchy(s), s ~ U(0, upper)
  double first_coef_variance = 1000.0;
  /// Prior variance of the time-constant link coefficients of the traditional model.
  double link_const_variance = 100.0;

  friend bool operator==(const PriorConfig&, const PriorConfig&) = default;
};

struct SplineConfig {
  double t_min = 0.0;
  double t_max = 5.0;
  std::size_t intervals = 20;
  friend bool operator==(const SplineConfig&, const SplineConfig&) = default;
};

/// 0, 0.25, ..., 4.75, +inf: twenty quarter-year intervals, the last one open.
inline std::vector<double> default_piecewise_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(0.25 * k);
  grid.push_back(std::numeric_limits<double>::infinity());
  return grid;
}

struct ModelSpec {
  VarianceModel variance = VarianceModel::Exchangeable;
  Linking linking = Linking::SharedSigma;
  Baseline baseline = Baseline::PSpline;
  /// Spline layout for g0 (log baseline) and g1..g3 (time-varying links).
  std::array<SplineConfig, 4> splines{};
  /// Breakpoints a_1 = 0 < ... < a_{K+1}; the last may be +inf.
  std::vector<double> piecewise_grid = default_piecewise_grid();
  PriorConfig priors{};

  /// True when a variance random effect b_2i exists.
  bool has_b2() const noexcept {
    return variance == VarianceModel::CovariateDispersion ||
           variance == VarianceModel::RandomInterceptDispersion;
  }
  bool has_beta2() const noexcept { return variance == VarianceModel::CovariateDispersion; }
  bool per_subject_sigma() const noexcept { return variance == VarianceModel::Exchangeable; }
  /// Dimension p of each random-effect vector b_i.
  std::size_t re_dim() const noexcept { return has_b2() ? 3 : 2; }
  bool time_varying_links() const noexcept { return linking != Linking::ConstantTraditional; }
  bool has_g3() const noexcept {
    return linking == Linking::SharedB2 || linking == Linking::SharedSigma;
  }
  /// Whether spline function g_l (l = 0..3) is part of this model.
  bool uses_spline(std::size_t l) const noexcept {
    if (l == 0) return baseline == Baseline::PSpline;
    if (l == 3) return has_g3();
    return time_varying_links();
  }
  std::size_t piecewise_intervals() const noexcept {
    return piecewise_grid.empty() ? 0 : piecewise_grid.size() - 1;
  }
  /// Stable label "VARIANCE+LINKING+BASELINE".
  std::string label() const {
    return std::string(to_string(variance)) + "+" + std::string(to_string(linking)) + "+" +
           std::string(to_string(baseline));
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Every broken rule, one message each. An empty result means the model spec is valid.
inline std::vector<std::string> validate_spec(const ModelSpec& spec) {
  std::vector<std::string> out;
  if (spec.linking == Linking::SharedB2 && !spec.has_b2())
    out.emplace_back("SHARED_B2 requires b2i (variance model COVARIATE_DISPERSION or "
                     "RANDOM_INTERCEPT_DISPERSION)");
  if (spec.linking == Linking::ConstantTraditional && spec.variance != VarianceModel::Common)
    out.emplace_back("CONSTANT_TRADITIONAL requires the COMMON variance model");

  for (std::size_t l = 0; l < 4; ++l) {
    if (!spec.uses_spline(l)) continue;
    const auto& c = spec.splines[l];
    const std::string name = "g" + std::to_string(l);
    if (!std::isfinite(c.t_min) || !std::isfinite(c.t_max) || !(c.t_max > c.t_min))
      out.push_back(name + " spline needs finite t_min < t_max");
    if (c.intervals == 0) out.push_back(name + " spline needs at least one interval");
  }

  if (spec.baseline == Baseline::Piecewise) {
    const auto& a = spec.piecewise_grid;
    if (a.size() < 2) {
      out.emplace_back("piecewise grid needs at least two breakpoints");
    } else {
      if (a.front() != 0.0) out.emplace_back("piecewise grid must start at 0");
      for (std::size_t k = 1; k < a.size(); ++k) {
        if (!(a[k] > a[k - 1])) {
          out.emplace_back("piecewise grid must be strictly increasing");
          break;
        }
        if (k + 1 < a.size() && !std::isfinite(a[k])) {
          out.emplace_back("only the last piecewise breakpoint may be infinite");
          break;
        }
      }
    }
  }

  const auto& p = spec.priors;
  const auto positive = [&](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(what) + " must be positive");
  };
  positive(p.beta_variance, "prior.beta_variance");
  positive(p.wishart_scale, "prior.wishart_scale");
  positive(p.smooth.shape, "prior.smooth_shape");
  positive(p.smooth.rate, "prior.smooth_rate");
  positive(p.lambda.shape, "prior.lambda_shape");
  positive(p.lambda.rate, "prior.lambda_rate");
  positive(p.rho.shape, "prior.rho_shape");
  positive(p.rho.rate, "prior.rho_rate");
  positive(p.log_uniform_bound, "prior.log_uniform_bound");
  positive(p.inv_gamma_eps, "prior.inv_gamma_eps");
  positive(p.half_cauchy_upper, "prior.half_cauchy_upper");
  positive(p.first_coef_variance, "prior.first_coef_variance");
  positive(p.link_const_variance, "prior.link_const_variance");
  if (!(p.wishart_df > static_cast<double>(spec.re_dim()) - 1.0))
    out.push_back("prior.wishart_df must exceed p - 1 = " + std::to_string(spec.re_dim() - 1));
  return out;
}

inline bool is_valid(const ModelSpec& spec) { return validate_spec(spec).empty(); }

/// The 33 cells of the model grid, in table order: SHARED_B2 (2 variance
/// models), SHARED_SIGMA (4), SLOPES_ONLY (4), then the traditional model,
/// each crossed with the three baselines. Splines, grid and priors are copied
/// from `base`.
inline std::vector<ModelSpec> enumerate_models(const ModelSpec& base = {}) {
  std::vector<ModelSpec> out;
  const auto add = [&](VarianceModel v, Linking l) {
    for (Baseline b : kBaselines) {
      ModelSpec s = base;
      s.variance = v;
      s.linking = l;
      s.baseline = b;
      out.push_back(std::move(s));
    }
  };
  add(VarianceModel::CovariateDispersion, Linking::SharedB2);
  add(VarianceModel::RandomInterceptDispersion, Linking::SharedB2);
  for (Linking l : {Linking::SharedSigma, Linking::SlopesOnly})
    for (VarianceModel v : kVarianceModels) add(v, l);
  add(VarianceModel::Common, Linking::ConstantTraditional);
  return out;
}

// ---------------------------------------------------------------------------
// Parameter state

struct ParameterState {
  Eigen::VectorXd beta1 = Eigen::VectorXd::Zero(5);  // intercept, time, sex, age, prevoi
  Eigen::VectorXd beta2;                             // dispersion covariates (3) or empty
  Eigen::VectorXd beta3 = Eigen::VectorXd::Zero(3);  // survival covariates
  Eigen::MatrixXd b;          // N x p random effects: b_{1i,1}, b_{1i,2}[, b_{2i}]
  Eigen::MatrixXd sigma_inv;  // p x p precision of b_i
  double log_sigma0 = 0.0;    // unused under EXCHANGEABLE
  Eigen::VectorXd log_sigma;  // per-subject log sd, EXCHANGEABLE only
  double hc_scale = 1.0;      // half-Cauchy scale, HALF_CAUCHY prior only
  std::array<Eigen::VectorXd, 4> gamma;  // spline coefficients, empty when unused
  std::array<double, 4> tau2{1.0, 1.0, 1.0, 1.0};
  Eigen::VectorXd lambda;  // piecewise levels, PIECEWISE only
  double rho = 1.0;        // Weibull shape, WEIBULL only
  double g1_const = 0.0;   // CONSTANT_TRADITIONAL only
  double g2_const = 0.0;

  std::size_t n_subjects() const noexcept { return static_cast<std::size_t>(b.rows()); }
};

inline bool operator==(const ParameterState& a, const ParameterState& b) {
  const auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  for (std::size_t l = 0; l < 4; ++l)
    if (!same(a.gamma[l], b.gamma[l])) return false;
  return same(a.beta1, b.beta1) && same(a.beta2, b.beta2) && same(a.beta3, b.beta3) &&
         same(a.b, b.b) && same(a.sigma_inv, b.sigma_inv) && a.log_sigma0 == b.log_sigma0 &&
         same(a.log_sigma, b.log_sigma) && a.hc_scale == b.hc_scale && a.tau2 == b.tau2 &&
         same(a.lambda, b.lambda) && a.rho == b.rho && a.g1_const == b.g1_const &&
         a.g2_const == b.g2_const;
}

/// A state shaped for `spec` and `n_subjects`: coefficients and random effects
/// at zero, unit variances and hazards, Sigma^{-1} at its prior mean.
inline ParameterState make_state(const ModelSpec& spec, std::size_t n_subjects) {
  ParameterState s;
  const auto n = static_cast<Eigen::Index>(n_subjects);
  const auto p = static_cast<Eigen::Index>(spec.re_dim());
  if (spec.has_beta2()) s.beta2 = Eigen::VectorXd::Zero(3);
  s.b = Eigen::MatrixXd::Zero(n, p);
  s.sigma_inv = Eigen::MatrixXd::Identity(p, p) *
                (spec.priors.wishart_df / spec.priors.wishart_scale);
  if (spec.per_subject_sigma()) s.log_sigma = Eigen::VectorXd::Zero(n);
  if (spec.priors.sigma_prior == SigmaPrior::HalfCauchy)
    s.hc_scale = std::min(1.0, 0.5 * spec.priors.half_cauchy_upper);
  for (std::size_t l = 0; l < 4; ++l)
    if (spec.uses_spline(l))
      s.gamma[l] = Eigen::VectorXd::Zero(
          static_cast<Eigen::Index>(spec.splines[l].intervals + kSplineDegree));
  if (spec.baseline == Baseline::Piecewise)
    s.lambda = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(spec.piecewise_intervals()));
  return s;
}

/// Throws std::invalid_argument when `state` does not have the shape `spec`
/// and `n_subjects` call for, or when a positivity constraint is broken.
inline void check_state(const ParameterState& s, const ModelSpec& spec, std::size_t n_subjects) {
  const auto fail = [](const std::string& why) {
    throw std::invalid_argument("parameter state: " + why);
  };
  const auto n = static_cast<Eigen::Index>(n_subjects);
  const auto p = static_cast<Eigen::Index>(spec.re_dim());
  if (s.beta1.size() != 5) fail("beta1 must have 5 elements");
  if (s.beta2.size() != (spec.has_beta2() ? 3 : 0)) fail("beta2 size does not match spec");
  if (s.beta3.size() != 3) fail("beta3 must have 3 elements");
  if (s.b.rows() != n || s.b.cols() != p) fail("random effects must be N x p");
  if (s.sigma_inv.rows() != p || s.sigma_inv.cols() != p) fail("Sigma^{-1} must be p x p");
  if (!s.sigma_inv.isApprox(s.sigma_inv.transpose(), 1e-12)) fail("Sigma^{-1} must be symmetric");
  if (Eigen::LLT<Eigen::MatrixXd>(s.sigma_inv).info() != Eigen::Success)
    fail("Sigma^{-1} must be positive definite");
  if (s.log_sigma.size() != (spec.per_subject_sigma() ? n : 0))
    fail("per-subject log sd size does not match spec");
  for (std::size_t l = 0; l < 4; ++l) {
    const Eigen::Index want =
        spec.uses_spline(l)
            ? static_cast<Eigen::Index>(spec.splines[l].intervals + kSplineDegree)
            : 0;
    if (s.gamma[l].size() != want) fail("gamma" + std::to_string(l) + " size does not match spec");
    if (spec.uses_spline(l) && !(s.tau2[l] > 0.0)) fail("tau2 must be positive");
  }
  if (spec.baseline == Baseline::Piecewise) {
    if (s.lambda.size() != static_cast<Eigen::Index>(spec.piecewise_intervals()))
      fail("lambda size does not match the piecewise grid");
    if ((s.lambda.array() <= 0.0).any()) fail("lambda must be positive");
  } else if (s.lambda.size() != 0) {
    fail("lambda present without a piecewise baseline");
  }
  if (spec.baseline == Baseline::Weibull && !(s.rho > 0.0)) fail("rho must be positive");
  if (spec.priors.sigma_prior == SigmaPrior::HalfCauchy && !(s.hc_scale > 0.0))
    fail("half-Cauchy scale must be positive");
}

}  // namespace jdm

#endif  // JDM_MODEL_HPP
