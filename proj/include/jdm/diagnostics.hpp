#ifndef JDM_DIAGNOSTICS_HPP
#define JDM_DIAGNOSTICS_HPP

// Effective sample size, acceptance rates, clamp counts and potential scale
// reduction for sampled chains.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "jdm/draws.hpp"
#include "jdm/sampler.hpp"

namespace jdm {

struct EssResult {
  double ess = 0.0;
  /// True when the series has zero variance; ess is then 1.
  bool degenerate = false;
};

/// Autocorrelation-based ESS with Geyer's initial positive sequence: sums of
/// adjacent autocorrelation pairs are accumulated while positive and forced
/// monotone non-increasing.
inline EssResult effective_sample_size(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("ESS needs at least two values");
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> c(x.size());
  for (std::size_t i = 0; i < n; ++i) c[i] = x[i] - mean;

  const auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += c[i] * c[i + lag];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 1e-300 * (1.0 + mean * mean))) return {1.0, true};

  double tau = -1.0;  // -1 + 2 sum rho_k  ==  -rho_0 + 2 sum pairs
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (autocov(2 * m) + autocov(2 * m + 1)) / c0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n) + 10.0));
  return {static_cast<double>(n) / tau, false};
}

struct ParameterDiagnostics {
  std::string name;
  double ess = 0.0;
  bool degenerate = false;
};

struct ChainReport {
  std::vector<ParameterDiagnostics> parameters;
  std::vector<BlockStats> acceptance;
  ClampCounters clamps;
};

/// Column k of the flattened draws.
inline std::vector<std::vector<double>> draw_columns(const PosteriorChain& chain) {
  const auto names = state_column_names(chain.spec, chain.subject_ids.size());
  std::vector<std::vector<double>> cols(names.size());
  for (const auto& d : chain.draws) {
    const auto flat = flatten_state(d, chain.spec);
    for (std::size_t k = 0; k < flat.size(); ++k) cols[k].push_back(flat[k]);
  }
  return cols;
}

inline ChainReport chain_diagnostics(const PosteriorChain& chain) {
  if (chain.size() < 10) throw std::invalid_argument("diagnostics need at least 10 draws");
  ChainReport r;
  const auto names = state_column_names(chain.spec, chain.subject_ids.size());
  const auto cols = draw_columns(chain);
  for (std::size_t k = 0; k < names.size(); ++k) {
    const EssResult e = effective_sample_size(cols[k]);
    r.parameters.push_back({names[k], e.ess, e.degenerate});
  }
  r.acceptance = chain.acceptance;
  r.clamps = chain.clamps;
  return r;
}

/// Gelman-Rubin potential scale reduction of one scalar across chains.
inline double psrf(const std::vector<std::vector<double>>& chains) {
  const std::size_t m = chains.size();
  if (m < 2) throw std::invalid_argument("PSRF needs at least two chains");
  const std::size_t n = chains.front().size();
  if (n < 2) throw std::invalid_argument("PSRF needs at least two draws per chain");
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("PSRF chains must have equal length");
  std::vector<double> means(m);
  double w = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (double v : chains[j]) s += v;
    means[j] = s / static_cast<double>(n);
    double ss = 0.0;
    for (double v : chains[j]) ss += (v - means[j]) * (v - means[j]);
    w += ss / static_cast<double>(n - 1);
  }
  w /= static_cast<double>(m);
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= static_cast<double>(m);
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= static_cast<double>(n) / static_cast<double>(m - 1);
  if (w <= 0.0) return b > 0.0 ? std::numeric_limits<double>::infinity() : 1.0;
  const double var_plus = (static_cast<double>(n - 1) / static_cast<double>(n)) * w + b / static_cast<double>(n);
  return std::sqrt(var_plus / w);
}

/// PSRF for every draw-file column of a set of chains fitted to the same data.
inline std::vector<std::pair<std::string, double>> psrf_table(const std::vector<PosteriorChain>& chains) {
  if (chains.size() < 2) throw std::invalid_argument("PSRF needs at least two chains");
  const auto names = state_column_names(chains.front().spec, chains.front().subject_ids.size());
  std::vector<std::vector<std::vector<double>>> cols;
  for (const auto& c : chains) cols.push_back(draw_columns(c));
  std::vector<std::pair<std::string, double>> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    std::vector<std::vector<double>> per_chain;
    for (const auto& c : cols) per_chain.push_back(c[k]);
    out.emplace_back(names[k], psrf(per_chain));
  }
  return out;
}

}  // namespace jdm

#endif  // JDM_DIAGNOSTICS_HPP
