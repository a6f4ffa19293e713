#ifndef JDM_DISTRIBUTIONS_HPP
#define JDM_DISTRIBUTIONS_HPP

// Log densities and samplers shared by the prior, the sampler and the
// simulator. Gamma distributions use the shape-rate convention. The Wishart
// uses the precision-scale convention: W ~ Wish(R, k) has density proportional to
// |W|^{(k-p-1)/2} exp(-tr(R W) / 2), so E[W] = k R^{-1}.

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace jdm::dist {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double normal_logpdf(double x, double mean, double variance) {
  const double z = x - mean;
  return -0.5 * (kLog2Pi + std::log(variance)) - 0.5 * z * z / variance;
}

inline double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

/// Density of log(X) for X ~ Gamma(shape, rate), evaluated at v = log(x).
/// Stays finite where x itself would under- or overflow.
inline double log_gamma_logpdf(double v, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + shape * v - rate * std::exp(v);
}

inline double half_cauchy_logpdf(double x, double scale) {
  if (x < 0.0 || !(scale > 0.0)) return kNegInf;
  const double z = x / scale;
  return std::log(2.0 / std::numbers::pi) - std::log(scale) - std::log1p(z * z);
}

inline double uniform_logpdf(double x, double lo, double hi) {
  return (x >= lo && x <= hi) ? -std::log(hi - lo) : kNegInf;
}

/// log Gamma_p(a), the multivariate gamma function.
inline double log_multigamma(double a, int p) {
  double out = 0.25 * p * (p - 1) * std::log(std::numbers::pi);
  for (int j = 0; j < p; ++j) out += std::lgamma(a - 0.5 * j);
  return out;
}

/// log density of W ~ Wish(R, k) (see file comment).
inline double wishart_logpdf(const Eigen::MatrixXd& w, const Eigen::MatrixXd& r, double k) {
  const auto p = static_cast<int>(w.rows());
  Eigen::LLT<Eigen::MatrixXd> lw(w);
  Eigen::LLT<Eigen::MatrixXd> lr(r);
  if (lw.info() != Eigen::Success) return kNegInf;
  if (lr.info() != Eigen::Success) throw std::invalid_argument("Wishart matrix R must be SPD");
  const double logdet_w = 2.0 * lw.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet_r = 2.0 * lr.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return 0.5 * (k - p - 1) * logdet_w - 0.5 * (r.cwiseProduct(w)).sum() + 0.5 * k * logdet_r -
         0.5 * k * p * std::numbers::ln2 - log_multigamma(0.5 * k, p);
}

/// log N_p(x; 0, Sigma) given the precision Sigma^{-1} and log|Sigma^{-1}|.
inline double mvn_logpdf_precision(const Eigen::VectorXd& x, const Eigen::MatrixXd& precision,
                                   double logdet_precision) {
  const auto p = static_cast<double>(x.size());
  return -0.5 * p * kLog2Pi + 0.5 * logdet_precision - 0.5 * x.dot(precision * x);
}

template <typename Rng>
double draw_gamma(Rng& rng, double shape, double rate) {
  std::gamma_distribution<double> g(shape, 1.0 / rate);
  return g(rng);
}

template <typename Rng>
double draw_normal(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return n(rng);
}

template <typename Rng>
double draw_uniform(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return u(rng);
}

template <typename Rng>
Eigen::VectorXd draw_std_normal(Rng& rng, Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = draw_normal(rng);
  return z;
}

/// Draws W ~ Wish(R, k) by the Bartlett decomposition of the standard
/// Wishart with scale R^{-1}.
template <typename Rng>
Eigen::MatrixXd draw_wishart(Rng& rng, const Eigen::MatrixXd& r, double k) {
  const Eigen::Index p = r.rows();
  const Eigen::MatrixXd scale = r.llt().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::MatrixXd l = scale.llt().matrixL();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    a(i, i) = std::sqrt(2.0 * draw_gamma(rng, 0.5 * (k - static_cast<double>(i)), 1.0));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = draw_normal(rng);
  }
  const Eigen::MatrixXd la = l * a;
  Eigen::MatrixXd w = la * la.transpose();
  return 0.5 * (w + w.transpose());
}

}  // namespace jdm::dist

#endif  // JDM_DISTRIBUTIONS_HPP
