#ifndef JDM_SPLINE_BASIS_HPP
#define JDM_SPLINE_BASIS_HPP

// Uniform cubic B-spline bases and first-order random-walk penalties.
//
// The basis lives on an equally spaced grid of s+1 knots spanning
// [t_min, t_max], extended by three knots on each side so that every one of
// the Q = s+3 functions is a translate of the same cubic bump. Evaluation is
// only defined on [t_min, t_max].

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace jdm {

inline constexpr int kSplineDegree = 3;

/// Values of the (at most) four nonzero basis functions at one point.
/// Functions first .. first+3 carry `values`; every other function is zero.
struct BasisRow {
  std::size_t first = 0;
  std::array<double, 4> values{};

  double dot(const Eigen::VectorXd& coef) const {
    return coef[first] * values[0] + coef[first + 1] * values[1] +
           coef[first + 2] * values[2] + coef[first + 3] * values[3];
  }
};

class SplineBasis {
 public:
  SplineBasis(double t_min, double t_max, std::size_t intervals)
      : t_min_(t_min), t_max_(t_max), intervals_(intervals) {
    if (!std::isfinite(t_min) || !std::isfinite(t_max))
      throw std::invalid_argument("spline bounds must be finite");
    if (!(t_max > t_min))
      throw std::invalid_argument("spline domain requires t_max > t_min");
    if (intervals == 0)
      throw std::invalid_argument("spline needs at least one interval");
    step_ = (t_max - t_min) / static_cast<double>(intervals);
  }

  double t_min() const noexcept { return t_min_; }
  double t_max() const noexcept { return t_max_; }
  std::size_t intervals() const noexcept { return intervals_; }
  std::size_t size() const noexcept { return intervals_ + kSplineDegree; }
  double step() const noexcept { return step_; }

  bool contains(double t) const noexcept { return t >= t_min_ && t <= t_max_; }

  /// Interior and boundary knots, t_min = k_0 < ... < k_s = t_max.
  Eigen::VectorXd knots() const {
    Eigen::VectorXd k(intervals_ + 1);
    for (std::size_t j = 0; j <= intervals_; ++j) k[j] = knot(j);
    k[intervals_] = t_max_;
    return k;
  }

  /// Full knot sequence including the three extension knots on each side.
  Eigen::VectorXd extended_knots() const {
    const std::size_t n = intervals_ + 1 + 2 * kSplineDegree;
    Eigen::VectorXd k(n);
    for (std::size_t j = 0; j < n; ++j)
      k[j] = t_min_ + (static_cast<double>(j) - kSplineDegree) * step_;
    return k;
  }

  BasisRow row(double t) const {
    if (!std::isfinite(t) || !contains(t))
      throw std::domain_error("spline evaluated outside [" +
                              std::to_string(t_min_) + ", " +
                              std::to_string(t_max_) + "] at t = " +
                              std::to_string(t));
    const double x = (t - t_min_) / step_;
    auto cell = static_cast<std::size_t>(std::floor(x));
    if (cell >= intervals_) cell = intervals_ - 1;
    const double u = x - static_cast<double>(cell);
    const double v = 1.0 - u;
    const double u2 = u * u;
    const double u3 = u2 * u;
    BasisRow r;
    r.first = cell;
    r.values[0] = v * v * v / 6.0;
    r.values[1] = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
    r.values[2] = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
    r.values[3] = u3 / 6.0;
    return r;
  }

  Eigen::VectorXd eval(double t) const {
    const BasisRow r = row(t);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
    for (std::size_t j = 0; j < 4; ++j) out[r.first + j] = r.values[j];
    return out;
  }

  double eval_spline(const Eigen::VectorXd& coef, double t) const {
    check_coefficients(coef);
    return row(t).dot(coef);
  }

  void check_coefficients(const Eigen::VectorXd& coef) const {
    if (static_cast<std::size_t>(coef.size()) != size())
      throw std::invalid_argument("spline expects " + std::to_string(size()) +
                                  " coefficients, got " +
                                  std::to_string(coef.size()));
  }

  /// n x Q design matrix with one basis row per time point.
  Eigen::MatrixXd design(const Eigen::VectorXd& times) const {
    Eigen::MatrixXd m(times.size(), static_cast<Eigen::Index>(size()));
    for (Eigen::Index i = 0; i < times.size(); ++i) m.row(i) = eval(times[i]).transpose();
    return m;
  }

 private:
  double knot(std::size_t j) const {
    return t_min_ + static_cast<double>(j) * step_;
  }

  double t_min_;
  double t_max_;
  std::size_t intervals_;
  double step_ = 0.0;
};

inline SplineBasis build_basis(double t_min, double t_max, std::size_t intervals) {
  return SplineBasis(t_min, t_max, intervals);
}

inline Eigen::VectorXd eval_basis(const SplineBasis& basis, double t) {
  return basis.eval(t);
}

inline double eval_spline(const SplineBasis& basis, const Eigen::VectorXd& gamma,
                          double t) {
  return basis.eval_spline(gamma, t);
}

/// (Q-1) x Q first-order difference operator: row r is e_{r+1} - e_r.
inline Eigen::MatrixXd difference_matrix(std::size_t q) {
  if (q < 2) throw std::invalid_argument("difference matrix needs Q >= 2");
  const auto n = static_cast<Eigen::Index>(q);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 1, n);
  for (Eigen::Index r = 0; r + 1 < n; ++r) {
    d(r, r) = -1.0;
    d(r, r + 1) = 1.0;
  }
  return d;
}

inline Eigen::MatrixXd penalty_matrix(const Eigen::MatrixXd& difference) {
  return difference.transpose() * difference;
}

/// Sum of squared adjacent differences, i.e. gamma' D'D gamma.
inline double rw1_roughness(const Eigen::VectorXd& gamma) {
  double ss = 0.0;
  for (Eigen::Index q = 1; q < gamma.size(); ++q) {
    const double d = gamma[q] - gamma[q - 1];
    ss += d * d;
  }
  return ss;
}

/// log N(gamma_1; 0, first_coef_variance) + sum_q log N(gamma_q; gamma_{q-1}, tau2).
inline double log_rw1_prior(const Eigen::VectorXd& gamma, double tau2,
                            double first_coef_variance = 1000.0) {
  if (!(tau2 > 0.0) || !std::isfinite(tau2))
    throw std::invalid_argument("random-walk variance must be positive");
  if (!(first_coef_variance > 0.0))
    throw std::invalid_argument("first coefficient variance must be positive");
  if (gamma.size() < 2)
    throw std::invalid_argument("random-walk prior needs at least two coefficients");
  constexpr double log_2pi = 1.8378770664093454835606594728112;
  const double increments = static_cast<double>(gamma.size() - 1);
  return -0.5 * (log_2pi + std::log(first_coef_variance)) -
         0.5 * gamma[0] * gamma[0] / first_coef_variance -
         0.5 * increments * (log_2pi + std::log(tau2)) -
         0.5 * rw1_roughness(gamma) / tau2;
}

}  // namespace jdm

#endif  // JDM_SPLINE_BASIS_HPP
