#ifndef JDM_WAIC_HPP
#define JDM_WAIC_HPP

#include <cmath>
#include <string>
#include <stdexcept>

#include <Eigen/Dense>

#include "jdm/errors.hpp"

namespace jdm {

struct WaicResult {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
};

/// Per-subject terms of the criterion; `loglik` is draws x subjects.
inline Eigen::MatrixX3d waic_components(const Eigen::MatrixXd& loglik) {
  const Eigen::Index s = loglik.rows();
  if (s < 2) throw std::invalid_argument("WAIC needs at least two draws");
  if (!loglik.allFinite()) {
    for (Eigen::Index j = 0; j < loglik.cols(); ++j)
      for (Eigen::Index i = 0; i < s; ++i)
        if (!std::isfinite(loglik(i, j)))
          throw NumericError("non-finite pointwise log-likelihood (draw " + std::to_string(i) +
                                 ", subject " + std::to_string(j) + ")",
                             loglik(i, j));
  }
  const double ds = static_cast<double>(s);
  Eigen::MatrixX3d out(loglik.cols(), 3);
  for (Eigen::Index j = 0; j < loglik.cols(); ++j) {
    const auto col = loglik.col(j);
    const double mx = col.maxCoeff();
    const double lppd = mx + std::log((col.array() - mx).exp().sum() / ds);
    // centred on the first draw so a constant shift of the column cancels exactly
    const Eigen::ArrayXd d = col.array() - col(0);
    const double var = (d - d.mean()).square().sum() / (ds - 1.0);
    out.row(j) << -2.0 * (lppd - var), lppd, var;
  }
  return out;
}

inline WaicResult compute_waic(const Eigen::MatrixXd& loglik) {
  const Eigen::MatrixX3d c = waic_components(loglik);
  WaicResult r;
  // fixed summation order over subjects
  for (Eigen::Index j = 0; j < c.rows(); ++j) {
    r.lppd += c(j, 1);
    r.p_waic += c(j, 2);
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  return r;
}

}  // namespace jdm

#endif  // JDM_WAIC_HPP
