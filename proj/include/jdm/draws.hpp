#ifndef JDM_DRAWS_HPP
#define JDM_DRAWS_HPP

// Flat, named view of a ParameterState: one scalar per draw-file column.
//
// Column order: beta1.k, beta2.k, beta3.k, g1_const, g2_const,
// sigma_inv.r.c (r <= c), log_sigma0, hc_scale, gamma<l>.q, tau2.<l>,
// lambda.k, rho, b.i.j, log_sigma.i. Parameters absent from the model are
// omitted.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "jdm/model.hpp"

namespace jdm {

namespace detail {

template <typename Visit>
void visit_columns(const ModelSpec& spec, std::size_t n_subjects, Visit&& visit) {
  const auto idx = [](auto... parts) {
    std::string s;
    ((s += "." + std::to_string(parts)), ...);
    return s;
  };
  for (int k = 0; k < 5; ++k)
    visit("beta1" + idx(k), [k](auto& st) -> auto& { return st.beta1[k]; });
  if (spec.has_beta2())
    for (int k = 0; k < 3; ++k)
      visit("beta2" + idx(k), [k](auto& st) -> auto& { return st.beta2[k]; });
  for (int k = 0; k < 3; ++k)
    visit("beta3" + idx(k), [k](auto& st) -> auto& { return st.beta3[k]; });
  if (spec.linking == Linking::ConstantTraditional) {
    visit("g1_const", [](auto& st) -> auto& { return st.g1_const; });
    visit("g2_const", [](auto& st) -> auto& { return st.g2_const; });
  }
  const int p = static_cast<int>(spec.re_dim());
  for (int r = 0; r < p; ++r)
    for (int c = r; c < p; ++c)
      visit("sigma_inv" + idx(r, c), [r, c](auto& st) -> auto& { return st.sigma_inv(r, c); });
  if (!spec.per_subject_sigma())
    visit("log_sigma0", [](auto& st) -> auto& { return st.log_sigma0; });
  if (spec.priors.sigma_prior == SigmaPrior::HalfCauchy)
    visit("hc_scale", [](auto& st) -> auto& { return st.hc_scale; });
  for (int l = 0; l < 4; ++l) {
    if (!spec.uses_spline(static_cast<std::size_t>(l))) continue;
    const int q = static_cast<int>(spec.splines[static_cast<std::size_t>(l)].intervals) + kSplineDegree;
    for (int k = 0; k < q; ++k)
      visit("gamma" + std::to_string(l) + idx(k),
            [l, k](auto& st) -> auto& { return st.gamma[static_cast<std::size_t>(l)][k]; });
  }
  for (int l = 0; l < 4; ++l)
    if (spec.uses_spline(static_cast<std::size_t>(l)))
      visit("tau2" + idx(l), [l](auto& st) -> auto& { return st.tau2[static_cast<std::size_t>(l)]; });
  if (spec.baseline == Baseline::Piecewise)
    for (int k = 0; k < static_cast<int>(spec.piecewise_intervals()); ++k)
      visit("lambda" + idx(k), [k](auto& st) -> auto& { return st.lambda[k]; });
  if (spec.baseline == Baseline::Weibull)
    visit("rho", [](auto& st) -> auto& { return st.rho; });
  for (int i = 0; i < static_cast<int>(n_subjects); ++i)
    for (int j = 0; j < p; ++j)
      visit("b" + idx(i, j), [i, j](auto& st) -> auto& { return st.b(i, j); });
  if (spec.per_subject_sigma())
    for (int i = 0; i < static_cast<int>(n_subjects); ++i)
      visit("log_sigma" + idx(i), [i](auto& st) -> auto& { return st.log_sigma[i]; });
}

}  // namespace detail

inline std::vector<std::string> state_column_names(const ModelSpec& spec, std::size_t n_subjects) {
  std::vector<std::string> names;
  detail::visit_columns(spec, n_subjects, [&](std::string name, auto&&) {
    names.push_back(std::move(name));
  });
  return names;
}

inline std::vector<double> flatten_state(const ParameterState& state, const ModelSpec& spec) {
  std::vector<double> out;
  detail::visit_columns(spec, state.n_subjects(), [&](const std::string&, auto&& ref) {
    out.push_back(ref(state));
  });
  return out;
}

inline ParameterState unflatten_state(const std::vector<double>& values, const ModelSpec& spec,
                                      std::size_t n_subjects) {
  ParameterState st = make_state(spec, n_subjects);
  std::size_t k = 0;
  const std::size_t want = state_column_names(spec, n_subjects).size();
  if (values.size() != want)
    throw std::invalid_argument("expected " + std::to_string(want) + " values, got " +
                                std::to_string(values.size()));
  detail::visit_columns(spec, n_subjects, [&](const std::string& name, auto&& ref) {
    ref(st) = values[k++];
    if (name.rfind("sigma_inv.", 0) == 0) {
      // mirror the stored upper triangle
      const auto r = static_cast<Eigen::Index>(name[10] - '0');
      const auto c = static_cast<Eigen::Index>(name[12] - '0');
      st.sigma_inv(c, r) = st.sigma_inv(r, c);
    }
  });
  return st;
}

/// Number of subjects implied by a draw-file header (count of b.<i>.0 columns).
inline std::size_t subjects_in_header(const std::vector<std::string>& header) {
  std::size_t n = 0;
  for (const auto& h : header)
    if (h.rfind("b.", 0) == 0 && h.size() > 2 && h.compare(h.size() - 2, 2, ".0") == 0) ++n;
  return n;
}

}  // namespace jdm

#endif  // JDM_DRAWS_HPP
