#ifndef JDM_SAMPLER_HPP
#define JDM_SAMPLER_HPP

// Adaptive Metropolis-within-Gibbs sampler for the joint dispersion model.
//
// Each sweep updates, in order: beta1, beta2, beta3, the constant link
// coefficients, every b_i, Sigma^{-1} (Gibbs), the residual scales, the
// half-Cauchy scale, gamma_0..gamma_3, 1/tau_l^2 (Gibbs), every lambda_k and
// rho. Random-walk proposal scales (and, for vector blocks, the proposal
// covariance) adapt during burn-in only and are frozen afterwards.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "jdm/distributions.hpp"
#include "jdm/errors.hpp"
#include "jdm/longitudinal.hpp"
#include "jdm/model.hpp"
#include "jdm/posterior.hpp"
#include "jdm/spline_basis.hpp"
#include "jdm/survival.hpp"

namespace jdm {

enum class Block {
  Beta1,
  Beta2,
  Beta3,
  LinkConst,
  RandomEffects,
  SigmaInv,
  ResidualScale,
  HalfCauchyScale,
  Splines,
  Smoothing,
  Lambda,
  Rho,
};

inline constexpr std::array<const char*, 12> kBlockNames{
    "beta1",  "beta2",    "beta3",  "link_const",   "b",      "sigma_inv",
    "sigma",  "hc_scale", "gamma",  "tau2",         "lambda", "rho"};

inline const char* block_name(Block b) { return kBlockNames[static_cast<std::size_t>(b)]; }

struct SamplerConfig {
  std::size_t iterations = 500000;
  std::size_t burn_in = 250000;
  std::size_t thin = 25;
  std::uint64_t seed = 1;
  /// Iterations between proposal-scale adjustments during burn-in.
  std::size_t adaptation_window = 50;
  double target_acceptance = 0.234;         // vector blocks
  double target_acceptance_scalar = 0.44;   // scalar blocks
  /// Blocks held at their initial values.
  std::set<Block> frozen;
  /// Starting point; a data-driven default is used when empty.
  std::optional<ParameterState> initial;

  std::size_t retained() const { return iterations > burn_in ? (iterations - burn_in) / thin : 0; }

  void validate() const {
    if (iterations == 0) throw std::invalid_argument("iterations must be positive");
    if (burn_in >= iterations) throw std::invalid_argument("burn-in must be below iterations");
    if (thin == 0) throw std::invalid_argument("thin must be at least 1");
    if (adaptation_window == 0) throw std::invalid_argument("adaptation window must be positive");
    for (double t : {target_acceptance, target_acceptance_scalar})
      if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("target acceptance must be in (0, 1)");
  }
};

struct BlockStats {
  std::string name;
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  double rate() const {
    return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0;
  }
};

struct PosteriorChain {
  ModelSpec spec;
  std::vector<std::string> subject_ids;
  std::vector<ParameterState> draws;
  Eigen::MatrixXd pointwise_loglik;  // draws x subjects
  std::vector<BlockStats> acceptance;  // post burn-in
  ClampCounters clamps;

  std::size_t size() const noexcept { return draws.size(); }
};

/// Random-walk proposal x' = x + s L z with an adaptive log-scale s and,
/// for vector blocks, a Cholesky factor L refreshed from the empirical
/// covariance of recent states.
class AdaptiveProposal {
 public:
  AdaptiveProposal() = default;
  AdaptiveProposal(const Eigen::MatrixXd& initial_cov, double target)
      : target_(target), dim_(initial_cov.rows()) {
    set_covariance(initial_cov);
    log_scale_ = std::log(2.38 / std::sqrt(static_cast<double>(dim_)));
    reset_moments();
  }
  AdaptiveProposal(double initial_sd, double target)
      : AdaptiveProposal(Eigen::MatrixXd::Constant(1, 1, initial_sd * initial_sd), target) {}

  Eigen::Index dim() const { return dim_; }
  double scale() const { return std::exp(log_scale_); }

  template <typename Rng>
  Eigen::VectorXd step(Rng& rng) const {
    return std::exp(log_scale_) * (chol_ * dist::draw_std_normal(rng, dim_));
  }

  void observe(bool accepted) {
    ++window_proposed_;
    if (accepted) ++window_accepted_;
  }

  void track(const Eigen::VectorXd& x) {
    if (dim_ < 2) return;
    ++n_;
    const Eigen::VectorXd d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_).transpose();
  }

  /// Robbins-Monro step on the log scale with a 1/sqrt(k) gain; k restarts
  /// whenever the covariance is refreshed.
  void adapt_scale() {
    if (window_proposed_ == 0) return;
    ++batches_;
    const double rate =
        static_cast<double>(window_accepted_) / static_cast<double>(window_proposed_);
    const double gain = 1.0 / std::sqrt(static_cast<double>(batches_));
    log_scale_ += gain * (rate - target_) / (target_ * (1.0 - target_));
    log_scale_ = std::clamp(log_scale_, -30.0, 10.0);
    window_proposed_ = window_accepted_ = 0;
  }

  /// Replace L by the Cholesky factor of the covariance of tracked states.
  void refresh_covariance() {
    if (dim_ < 2 || n_ < static_cast<std::uint64_t>(5 * dim_ + 5)) return;
    Eigen::MatrixXd cov = m2_ / static_cast<double>(n_ - 1);
    const double ridge = 1e-8 * (cov.trace() / static_cast<double>(dim_)) + 1e-14;
    cov.diagonal().array() += ridge;
    if (set_covariance(cov)) {
      log_scale_ = std::log(2.38 / std::sqrt(static_cast<double>(dim_)));
      batches_ = 0;
    }
    reset_moments();
  }

 private:
  bool set_covariance(const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success || !llt.matrixL().toDenseMatrix().allFinite()) return false;
    chol_ = llt.matrixL();
    return true;
  }
  void reset_moments() {
    n_ = 0;
    mean_ = Eigen::VectorXd::Zero(dim_);
    m2_ = Eigen::MatrixXd::Zero(dim_, dim_);
  }

  double target_ = 0.234;
  Eigen::Index dim_ = 1;
  Eigen::MatrixXd chol_ = Eigen::MatrixXd::Identity(1, 1);
  double log_scale_ = 0.0;
  std::uint64_t window_proposed_ = 0;
  std::uint64_t window_accepted_ = 0;
  std::uint64_t batches_ = 0;
  std::uint64_t n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

/// Extra log-density terms for blocks sampled on the log scale.
inline double log_scale_jacobian(const ParameterState& s, const ModelSpec& spec) {
  double out = 0.0;
  if (spec.per_subject_sigma()) {
    for (Eigen::Index i = 0; i < s.log_sigma.size(); ++i)
      out += log_sigma_jacobian(s.log_sigma[i], spec.priors.sigma_prior);
  } else {
    out += log_sigma_jacobian(s.log_sigma0, spec.priors.sigma_prior);
  }
  if (spec.priors.sigma_prior == SigmaPrior::HalfCauchy) out += std::log(s.hc_scale);
  if (spec.baseline == Baseline::Piecewise) out += s.lambda.array().log().sum();
  if (spec.baseline == Baseline::Weibull) out += std::log(s.rho);
  return out;
}

/// Data-driven starting point: pooled least squares for beta1, pooled
/// within-subject residual variance for the scales, a constant hazard at
/// the crude event rate for the baseline, everything else at make_state().
inline ParameterState initial_state(const Dataset& data, const ModelSpec& spec) {
  ParameterState s = make_state(spec, data.size());
  const auto n_total = static_cast<Eigen::Index>(data.total_observations());
  Eigen::MatrixXd x(n_total, 5);
  Eigen::VectorXd y(n_total);
  Eigen::Index r = 0;
  for (const auto& sub : data)
    for (std::size_t j = 0; j < sub.n_obs(); ++j, ++r) {
      x.row(r) << 1.0, sub.times[j], sub.gender, sub.age, sub.prevoi;
      y[r] = sub.y[j];
    }
  Eigen::MatrixXd xtx = x.transpose() * x;
  xtx.diagonal().array() += 1e-8;
  s.beta1 = xtx.ldlt().solve(x.transpose() * y);
  const double pooled_var = std::max((y - x * s.beta1).squaredNorm() /
                                         std::max<double>(1.0, static_cast<double>(n_total - 5)),
                                     1e-6);

  // within-subject residual variance from per-subject lines
  std::vector<double> subject_var(data.size(), -1.0);
  double rss = 0.0, dof = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& sub = data[i];
    const std::size_t n = sub.n_obs();
    if (n < 3) continue;
    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), 2);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < n; ++j) {
      z.row(static_cast<Eigen::Index>(j)) << 1.0, sub.times[j];
      v[static_cast<Eigen::Index>(j)] = sub.y[j];
    }
    Eigen::MatrixXd ztz = z.transpose() * z;
    ztz.diagonal().array() += 1e-10;
    const Eigen::VectorXd coef = ztz.ldlt().solve(z.transpose() * v);
    const double ss = (v - z * coef).squaredNorm();
    rss += ss;
    dof += static_cast<double>(n - 2);
    if (n >= 4) subject_var[i] = std::max(ss / static_cast<double>(n - 2), 1e-4);
  }
  const double within_var = dof > 0.0 && rss > 0.0 ? rss / dof : pooled_var;
  s.log_sigma0 = 0.5 * std::log(within_var);
  if (spec.per_subject_sigma())
    for (std::size_t i = 0; i < data.size(); ++i)
      s.log_sigma[static_cast<Eigen::Index>(i)] =
          0.5 * std::log(subject_var[i] > 0.0 ? subject_var[i] : within_var);
  if (spec.priors.sigma_prior == SigmaPrior::HalfCauchy)
    s.hc_scale = std::clamp(std::sqrt(within_var), 1e-3, 0.5 * spec.priors.half_cauchy_upper);

  double events = 0.0, exposure = 0.0;
  for (const auto& sub : data) {
    events += sub.event;
    exposure += sub.event_time;
  }
  const double rate = std::max(events, 0.5) / std::max(exposure, 1e-6);
  if (spec.baseline == Baseline::PSpline) s.gamma[0].setConstant(std::log(rate));
  if (spec.baseline == Baseline::Piecewise) s.lambda.setConstant(rate);
  return s;
}

namespace detail {

class ChainRunner {
 public:
  ChainRunner(const Dataset& data, const ModelSpec& spec, const SamplerConfig& cfg,
              bool prior_only, std::size_t chain_index)
      : data_(data), spec_(spec), cfg_(cfg), prior_only_(prior_only), splines_(spec) {
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed),
                      static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(chain_index)};
    rng_.seed(seq);
    if (!prior_only_) {
      rows_.reserve(data.size());
      for (const auto& s : data) rows_.push_back(make_survival_rows(splines_, spec_, s.event_time));
    }
    for (std::size_t b = 0; b < kBlockNames.size(); ++b) stats_[b].name = kBlockNames[b];
  }

  PosteriorChain run() {
    initialise();
    const std::size_t n = data_.size();
    PosteriorChain chain;
    chain.spec = spec_;
    for (const auto& s : data_) chain.subject_ids.push_back(s.id);
    const std::size_t keep = cfg_.retained();
    chain.draws.reserve(keep);
    chain.pointwise_loglik.resize(static_cast<Eigen::Index>(keep), static_cast<Eigen::Index>(n));

    std::size_t next_refresh = 4 * cfg_.adaptation_window;
    for (std::size_t it = 0; it < cfg_.iterations; ++it) {
      adapting_ = it < cfg_.burn_in;
      sweep();
      if (adapting_) {
        if ((it + 1) % cfg_.adaptation_window == 0) for_each_proposal([](auto& p) { p.adapt_scale(); });
        if (it + 1 == next_refresh) {
          for_each_proposal([](auto& p) { p.refresh_covariance(); });
          next_refresh *= 2;
        }
      } else if ((it - cfg_.burn_in + 1) % cfg_.thin == 0) {
        const auto row = static_cast<Eigen::Index>(chain.draws.size());
        chain.draws.push_back(cur_);
        for (std::size_t i = 0; i < n; ++i)
          chain.pointwise_loglik(row, static_cast<Eigen::Index>(i)) = long_[i] + surv_[i];
      }
    }
    for (std::size_t b = 0; b < stats_.size(); ++b) {
      if (stats_[b].proposed > 0) chain.acceptance.push_back(stats_[b]);
    }
    chain.clamps = clamps_;
    return chain;
  }

 private:
  // ---- likelihood pieces -------------------------------------------------

  double long_i(const ParameterState& s, std::size_t i) {
    if (prior_only_) return 0.0;
    return long_loglik_subject(data_[i], s, spec_, i, &clamps_);
  }

  double surv_i(const ParameterState& s, std::size_t i) {
    if (prior_only_) return 0.0;
    const LinkTerms terms = link_terms(s, spec_, data_[i], i, &clamps_);
    return surv_loglik_cached(data_[i], s, spec_, terms, rows_[i], &clamps_);
  }

  static double sum(const std::vector<double>& v) {
    double t = 0.0;
    for (double x : v) t += x;
    return t;
  }

  bool frozen(Block b) const { return cfg_.frozen.count(b) > 0; }

  bool accept(double log_ratio) {
    const double u = dist::draw_uniform(rng_);
    if (std::isnan(log_ratio)) return false;
    return log_ratio >= 0.0 || std::log(u) < log_ratio;
  }

  void record(Block b, bool accepted) {
    if (adapting_) return;
    auto& st = stats_[static_cast<std::size_t>(b)];
    ++st.proposed;
    if (accepted) ++st.accepted;
  }

  /// Metropolis step for a block that can touch every subject.
  template <typename Get, typename Set, typename Prior>
  void update_global(Block block, AdaptiveProposal& prop, Get get, Set set, Prior prior,
                     bool touches_long, bool touches_surv) {
    const Eigen::VectorXd x0 = get();
    const double p0 = prior();
    set(x0 + prop.step(rng_));
    bool ok = false;
    const double p1 = prior();
    if (std::isfinite(p1)) {
      double ratio = p1 - p0;
      try {
        if (touches_long) {
          for (std::size_t i = 0; i < long_.size(); ++i) long_new_[i] = long_i(cur_, i);
          ratio += sum(long_new_) - sum(long_);
        }
        if (touches_surv) {
          for (std::size_t i = 0; i < surv_.size(); ++i) surv_new_[i] = surv_i(cur_, i);
          ratio += sum(surv_new_) - sum(surv_);
        }
        ok = accept(ratio);
      } catch (const NumericError&) {
        ok = false;
      }
    }
    if (ok) {
      if (touches_long) long_.swap(long_new_);
      if (touches_surv) surv_.swap(surv_new_);
    } else {
      set(x0);
    }
    prop.observe(ok);
    if (adapting_) prop.track(get());
    record(block, ok);
  }

  /// Metropolis step for a block belonging to subject i.
  template <typename Get, typename Set, typename Prior>
  void update_subject(Block block, std::size_t i, AdaptiveProposal& prop, Get get, Set set,
                      Prior prior, bool touches_surv) {
    const Eigen::VectorXd x0 = get();
    const double p0 = prior();
    set(x0 + prop.step(rng_));
    bool ok = false;
    double l1 = long_[i], s1 = surv_[i];
    const double p1 = prior();
    if (std::isfinite(p1)) {
      try {
        l1 = long_i(cur_, i);
        if (touches_surv) s1 = surv_i(cur_, i);
        ok = accept(p1 - p0 + (l1 - long_[i]) + (s1 - surv_[i]));
      } catch (const NumericError&) {
        ok = false;
      }
    }
    if (ok) {
      long_[i] = l1;
      surv_[i] = s1;
    } else {
      set(x0);
    }
    prop.observe(ok);
    if (adapting_) prop.track(get());
    record(block, ok);
  }

  template <typename F>
  void for_each_proposal(F&& f) {
    for (auto* p : {&beta1_, &beta2_, &beta3_, &link_, &sigma0_, &hc_, &rho_}) f(*p);
    for (auto& p : gamma_) f(p);
    for (auto& p : re_) f(p);
    for (auto& p : sigma_i_) f(p);
    for (auto& p : lambda_) f(p);
  }

  // ---- initialisation ----------------------------------------------------

  void initialise() {
    const std::size_t n = data_.size();
    if (cfg_.initial) {
      check_state(*cfg_.initial, spec_, n);
      cur_ = *cfg_.initial;
    } else {
      cur_ = prior_only_ ? make_state(spec_, n) : initial_state(data_, spec_);
    }
    long_.assign(n, 0.0);
    surv_.assign(n, 0.0);
    long_new_.assign(n, 0.0);
    surv_new_.assign(n, 0.0);

    for (int attempt = 0;; ++attempt) {
      if (evaluate_all()) break;
      if (attempt + 1 >= 100)
        throw FitError("log posterior not finite at the initial state after 100 attempts");
      jitter();
    }
    sigma_inv_logdet_ = log_det_spd(cur_.sigma_inv);
    build_proposals();
  }

  bool evaluate_all() {
    try {
      const double lp = log_prior(cur_, spec_);
      if (!std::isfinite(lp)) return false;
      for (std::size_t i = 0; i < data_.size(); ++i) {
        long_[i] = long_i(cur_, i);
        surv_[i] = surv_i(cur_, i);
        if (!std::isfinite(long_[i]) || !std::isfinite(surv_[i])) return false;
      }
      return true;
    } catch (const NumericError&) {
      return false;
    }
  }

  void jitter() {
    const auto perturb = [&](Eigen::VectorXd& v, double sd) {
      for (Eigen::Index k = 0; k < v.size(); ++k) v[k] += sd * dist::draw_normal(rng_);
    };
    perturb(cur_.beta1, 0.1);
    perturb(cur_.beta2, 0.1);
    perturb(cur_.beta3, 0.1);
    for (auto& g : cur_.gamma) perturb(g, 0.1);
    perturb(cur_.log_sigma, 0.1);
    cur_.log_sigma0 += 0.1 * dist::draw_normal(rng_);
    cur_.b *= 0.5;
  }

  void build_proposals() {
    const double ta = cfg_.target_acceptance;
    const double ts = cfg_.target_acceptance_scalar;
    const double within_var = std::exp(2.0 * cur_.log_sigma0);
    const std::size_t n = data_.size();
    const auto p = static_cast<Eigen::Index>(spec_.re_dim());

    // beta1: conditional posterior covariance given b and sigma
    Eigen::MatrixXd prec1 = Eigen::MatrixXd::Identity(5, 5) / spec_.priors.beta_variance;
    Eigen::MatrixXd prec2 = Eigen::MatrixXd::Identity(3, 3) / spec_.priors.beta_variance;
    std::size_t total_obs = 0;
    if (!prior_only_) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto& s = data_[i];
        const double var = std::exp(2.0 * log_residual_sd(spec_, cur_, s, i));
        Eigen::Vector3d x2(s.gender, s.age, s.prevoi);
        prec2 += 0.5 * static_cast<double>(s.n_obs()) * x2 * x2.transpose();
        for (std::size_t j = 0; j < s.n_obs(); ++j) {
          Eigen::Matrix<double, 5, 1> x;
          x << 1.0, s.times[j], s.gender, s.age, s.prevoi;
          prec1 += x * x.transpose() / var;
        }
        total_obs += s.n_obs();
      }
    }
    beta1_ = AdaptiveProposal(prec1.inverse(), ta);
    beta2_ = AdaptiveProposal(prec2.inverse(), ta);
    beta3_ = AdaptiveProposal(Eigen::MatrixXd::Identity(3, 3) * 0.01, ta);
    link_ = AdaptiveProposal(Eigen::MatrixXd::Identity(2, 2) * 0.01, ta);
    sigma0_ = AdaptiveProposal(prior_only_ ? 1.0 : std::sqrt(0.5 / std::max<double>(1.0, static_cast<double>(total_obs))), ts);
    hc_ = AdaptiveProposal(0.5, ts);
    rho_ = AdaptiveProposal(0.1, ts);
    for (std::size_t l = 0; l < 4; ++l)
      if (spec_.uses_spline(l))
        gamma_[l] = AdaptiveProposal(
            Eigen::MatrixXd::Identity(cur_.gamma[l].size(), cur_.gamma[l].size()) * 0.01, ta);
    re_.clear();
    sigma_i_.clear();
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::MatrixXd prec = cur_.sigma_inv;
      double n_i = 0.0;
      if (!prior_only_) {
        const auto& s = data_[i];
        n_i = static_cast<double>(s.n_obs());
        for (std::size_t j = 0; j < s.n_obs(); ++j) {
          Eigen::Vector2d z(1.0, s.times[j]);
          prec.topLeftCorner(2, 2) += z * z.transpose() / within_var;
        }
        if (p == 3) prec(2, 2) += 0.5 * n_i;
      }
      re_.emplace_back(prec.inverse(), ta);
      if (spec_.per_subject_sigma())
        sigma_i_.emplace_back(prior_only_ ? 1.0 : std::sqrt(0.5 / std::max(1.0, n_i)), ts);
    }
    lambda_.assign(static_cast<std::size_t>(cur_.lambda.size()), AdaptiveProposal(0.3, ts));
  }

  // ---- one sweep ---------------------------------------------------------

  void sweep() {
    const auto& pr = spec_.priors;
    const bool sigma_in_surv = spec_.linking == Linking::SharedSigma;
    const auto gauss = [](const Eigen::VectorXd& v, double var) {
      double t = 0.0;
      for (Eigen::Index k = 0; k < v.size(); ++k) t += dist::normal_logpdf(v[k], 0.0, var);
      return t;
    };

    if (!frozen(Block::Beta1))
      update_global(
          Block::Beta1, beta1_, [&] { return cur_.beta1; }, [&](const Eigen::VectorXd& v) { cur_.beta1 = v; },
          [&] { return gauss(cur_.beta1, pr.beta_variance); }, true, false);

    if (spec_.has_beta2() && !frozen(Block::Beta2))
      update_global(
          Block::Beta2, beta2_, [&] { return cur_.beta2; }, [&](const Eigen::VectorXd& v) { cur_.beta2 = v; },
          [&] { return gauss(cur_.beta2, pr.beta_variance); }, true, sigma_in_surv);

    if (!frozen(Block::Beta3))
      update_global(
          Block::Beta3, beta3_, [&] { return cur_.beta3; }, [&](const Eigen::VectorXd& v) { cur_.beta3 = v; },
          [&] { return gauss(cur_.beta3, pr.beta_variance); }, false, true);

    if (spec_.linking == Linking::ConstantTraditional && !frozen(Block::LinkConst))
      update_global(
          Block::LinkConst, link_,
          [&] { return Eigen::Vector2d(cur_.g1_const, cur_.g2_const).eval(); },
          [&](const Eigen::VectorXd& v) {
            cur_.g1_const = v[0];
            cur_.g2_const = v[1];
          },
          [&] {
            return dist::normal_logpdf(cur_.g1_const, 0.0, pr.link_const_variance) +
                   dist::normal_logpdf(cur_.g2_const, 0.0, pr.link_const_variance);
          },
          false, true);

    if (!frozen(Block::RandomEffects))
      for (std::size_t i = 0; i < data_.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        update_subject(
            Block::RandomEffects, i, re_[i], [&] { return cur_.b.row(row).transpose().eval(); },
            [&](const Eigen::VectorXd& v) { cur_.b.row(row) = v.transpose(); },
            [&] {
              return dist::mvn_logpdf_precision(cur_.b.row(row).transpose(), cur_.sigma_inv,
                                                sigma_inv_logdet_);
            },
            true);
      }

    if (!frozen(Block::SigmaInv)) {
      Eigen::MatrixXd r = wishart_matrix(spec_) + cur_.b.transpose() * cur_.b;
      cur_.sigma_inv = dist::draw_wishart(rng_, r, pr.wishart_df + static_cast<double>(data_.size()));
      sigma_inv_logdet_ = log_det_spd(cur_.sigma_inv);
      record(Block::SigmaInv, true);
    }

    if (!frozen(Block::ResidualScale)) {
      const auto scale_prior = [&](double u) {
        return log_sigma_prior(u, pr, cur_.hc_scale) + log_sigma_jacobian(u, pr.sigma_prior);
      };
      if (spec_.per_subject_sigma()) {
        for (std::size_t i = 0; i < data_.size(); ++i) {
          const auto row = static_cast<Eigen::Index>(i);
          update_subject(
              Block::ResidualScale, i, sigma_i_[i],
              [&] { return Eigen::VectorXd::Constant(1, cur_.log_sigma[row]); },
              [&](const Eigen::VectorXd& v) { cur_.log_sigma[row] = v[0]; },
              [&] { return scale_prior(cur_.log_sigma[row]); }, sigma_in_surv);
        }
      } else {
        update_global(
            Block::ResidualScale, sigma0_, [&] { return Eigen::VectorXd::Constant(1, cur_.log_sigma0); },
            [&](const Eigen::VectorXd& v) { cur_.log_sigma0 = v[0]; },
            [&] { return scale_prior(cur_.log_sigma0); }, true, sigma_in_surv);
      }
    }

    if (pr.sigma_prior == SigmaPrior::HalfCauchy && !frozen(Block::HalfCauchyScale))
      update_global(
          Block::HalfCauchyScale, hc_, [&] { return Eigen::VectorXd::Constant(1, std::log(cur_.hc_scale)); },
          [&](const Eigen::VectorXd& v) { cur_.hc_scale = std::exp(v[0]); },
          [&] {
            double t = dist::uniform_logpdf(cur_.hc_scale, 0.0, pr.half_cauchy_upper) +
                       std::log(cur_.hc_scale);
            if (!std::isfinite(t)) return t;
            if (spec_.per_subject_sigma()) {
              for (Eigen::Index i = 0; i < cur_.log_sigma.size(); ++i)
                t += dist::half_cauchy_logpdf(std::exp(cur_.log_sigma[i]), cur_.hc_scale);
            } else {
              t += dist::half_cauchy_logpdf(std::exp(cur_.log_sigma0), cur_.hc_scale);
            }
            return t;
          },
          false, false);

    if (!frozen(Block::Splines))
      for (std::size_t l = 0; l < 4; ++l) {
        if (!spec_.uses_spline(l)) continue;
        update_global(
            Block::Splines, gamma_[l], [&] { return cur_.gamma[l]; },
            [&](const Eigen::VectorXd& v) { cur_.gamma[l] = v; },
            [&] { return log_rw1_prior(cur_.gamma[l], cur_.tau2[l], pr.first_coef_variance); },
            false, true);
      }

    if (!frozen(Block::Smoothing))
      for (std::size_t l = 0; l < 4; ++l) {
        if (!spec_.uses_spline(l)) continue;
        const double shape =
            pr.smooth.shape + 0.5 * static_cast<double>(cur_.gamma[l].size() - 1);
        const double rate = pr.smooth.rate + 0.5 * rw1_roughness(cur_.gamma[l]);
        const double precision = std::max(dist::draw_gamma(rng_, shape, rate), 1e-300);
        cur_.tau2[l] = 1.0 / precision;
        record(Block::Smoothing, true);
      }

    if (spec_.baseline == Baseline::Piecewise && !frozen(Block::Lambda))
      for (std::size_t k = 0; k < lambda_.size(); ++k) {
        const auto idx = static_cast<Eigen::Index>(k);
        update_global(
            Block::Lambda, lambda_[k], [&] { return Eigen::VectorXd::Constant(1, std::log(cur_.lambda[idx])); },
            [&](const Eigen::VectorXd& v) { cur_.lambda[idx] = std::exp(v[0]); },
            [&] {
              return dist::gamma_logpdf(cur_.lambda[idx], pr.lambda.shape, pr.lambda.rate) +
                     std::log(cur_.lambda[idx]);
            },
            false, true);
      }

    if (spec_.baseline == Baseline::Weibull && !frozen(Block::Rho))
      update_global(
          Block::Rho, rho_, [&] { return Eigen::VectorXd::Constant(1, std::log(cur_.rho)); },
          [&](const Eigen::VectorXd& v) { cur_.rho = std::exp(v[0]); },
          [&] { return dist::gamma_logpdf(cur_.rho, pr.rho.shape, pr.rho.rate) + std::log(cur_.rho); },
          false, true);
  }

  const Dataset& data_;
  ModelSpec spec_;
  SamplerConfig cfg_;
  bool prior_only_;
  SplineSet splines_;
  std::vector<SurvivalRows> rows_;
  std::mt19937_64 rng_;

  ParameterState cur_;
  double sigma_inv_logdet_ = 0.0;
  std::vector<double> long_, surv_, long_new_, surv_new_;
  ClampCounters clamps_;
  bool adapting_ = true;

  AdaptiveProposal beta1_, beta2_, beta3_, link_, sigma0_, hc_, rho_;
  std::array<AdaptiveProposal, 4> gamma_;
  std::vector<AdaptiveProposal> re_, sigma_i_, lambda_;
  std::array<BlockStats, kBlockNames.size()> stats_;
};

inline void require_valid(const ModelSpec& spec) {
  const auto problems = validate_spec(spec);
  if (problems.empty()) return;
  std::string msg = "invalid model spec " + spec.label() + ":";
  for (const auto& p : problems) msg += " " + p + ";";
  throw FitError(msg);
}

}  // namespace detail

/// Posterior sampling for one chain. Seeded runs are bit-reproducible;
/// `chain_index` selects an independent stream for the same seed.
inline PosteriorChain run_chain(const Dataset& data, const ModelSpec& spec,
                                const SamplerConfig& config, std::size_t chain_index = 0) {
  detail::require_valid(spec);
  if (data.empty()) throw FitError("cannot fit an empty dataset; use sample_prior instead");
  config.validate();
  for (const auto& s : data) {
    for (std::size_t l = 0; l < 4; ++l)
      if (spec.uses_spline(l) && !SplineBasis(spec.splines[l].t_min, spec.splines[l].t_max,
                                              spec.splines[l].intervals)
                                      .contains(s.event_time))
        throw FitError("event time of subject '" + s.id + "' lies outside the g" +
                       std::to_string(l) + " spline domain");
  }
  return detail::ChainRunner(data, spec, config, false, chain_index).run();
}

/// Runs the same transition kernels with the likelihood switched off, so the
/// draws target the prior. `n_subjects` sizes the random effects and
/// per-subject scales.
inline PosteriorChain sample_prior(const ModelSpec& spec, const SamplerConfig& config,
                                   std::size_t n_subjects = 1) {
  detail::require_valid(spec);
  config.validate();
  if (n_subjects == 0) throw FitError("prior sampling needs at least one subject slot");
  std::vector<Subject> placeholders;
  for (std::size_t i = 0; i < n_subjects; ++i) {
    Subject s;
    s.id = "prior_" + std::to_string(i);
    s.times = {0.0};
    s.y = {0.0};
    placeholders.push_back(std::move(s));
  }
  const Dataset slots(std::move(placeholders));
  PosteriorChain chain = detail::ChainRunner(slots, spec, config, true, 0).run();
  return chain;
}

/// Independent chains, one thread each, streams derived from the shared seed.
inline std::vector<PosteriorChain> run_chains(const Dataset& data, const ModelSpec& spec,
                                              const SamplerConfig& config, std::size_t n_chains) {
  if (n_chains == 0) throw std::invalid_argument("need at least one chain");
  std::vector<PosteriorChain> out(n_chains);
  std::vector<std::exception_ptr> errors(n_chains);
  {
    std::vector<std::jthread> workers;
    for (std::size_t c = 0; c < n_chains; ++c)
      workers.emplace_back([&, c] {
        try {
          out[c] = run_chain(data, spec, config, c);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace jdm

#endif  // JDM_SAMPLER_HPP
