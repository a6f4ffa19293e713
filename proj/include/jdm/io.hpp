#ifndef JDM_IO_HPP
#define JDM_IO_HPP

// CSV ingestion and export: datasets, draws, pointwise log-likelihoods,
// WAIC tables, posterior summaries and curve tables.
//
//   longitudinal  id,time_years,y_sqrt_cd4
//   survival      id,event_time_years,event,gender,age50,prevoi
//   draws         one column per state_column_names() entry
//   loglik        one column per subject id
//   waic          model,lppd,p_waic,waic
//   summary       parameter,mean,lo2.5,hi97.5
//   curves        g,label,t,mean,lo2.5,hi97.5

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "jdm/draws.hpp"
#include "jdm/errors.hpp"
#include "jdm/model.hpp"
#include "jdm/sampler.hpp"
#include "jdm/spec_config.hpp"
#include "jdm/spline_basis.hpp"
#include "jdm/waic.hpp"

namespace jdm {

inline constexpr std::string_view kLongitudinalHeader = "id,time_years,y_sqrt_cd4";
inline constexpr std::string_view kSurvivalHeader = "id,event_time_years,event,gender,age50,prevoi";

namespace detail {

/// Reads comma-separated records; blank lines are skipped, empty fields
/// rejected.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  std::vector<std::string> header() {
    std::vector<std::string> h;
    if (!next(h)) throw ParseError(source_ + ": missing header", 1);
    return h;
  }

  void expect_header(std::string_view want) {
    const auto h = header();
    std::string joined;
    for (std::size_t k = 0; k < h.size(); ++k) joined += (k ? "," : "") + h[k];
    if (joined != want)
      throw ParseError(source_ + ": expected header '" + std::string(want) + "', got '" + joined + "'",
                       line_);
  }

  bool next(std::vector<std::string>& fields) {
    std::string raw;
    while (std::getline(in_, raw)) {
      ++line_;
      if (trim(raw).empty()) continue;
      fields.clear();
      std::size_t start = 0;
      while (true) {
        const auto comma = raw.find(',', start);
        const std::string_view f = trim(std::string_view(raw).substr(
            start, comma == std::string::npos ? std::string::npos : comma - start));
        if (f.empty()) fail("empty field " + std::to_string(fields.size() + 1));
        fields.emplace_back(f);
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      return true;
    }
    return false;
  }

  std::size_t line() const { return line_; }
  const std::string& source() const { return source_; }

  [[noreturn]] void fail(const std::string& why) const { throw ParseError(source_ + ": " + why, line_); }

  double real(const std::string& f, const char* what) const {
    const auto v = to_double(f);
    if (!v || !std::isfinite(*v)) fail(std::string("malformed ") + what + " '" + f + "'");
    return *v;
  }

  int binary(const std::string& f, const char* what) const {
    const auto v = to_integer(f);
    if (!v || (*v != 0 && *v != 1)) fail(std::string(what) + " must be 0 or 1, got '" + f + "'");
    return static_cast<int>(*v);
  }

  void arity(const std::vector<std::string>& fields, std::size_t n) const {
    if (fields.size() != n)
      fail("expected " + std::to_string(n) + " fields, got " + std::to_string(fields.size()));
  }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

inline void write_row(std::ostream& out, const std::vector<double>& values) {
  for (std::size_t k = 0; k < values.size(); ++k) out << (k ? "," : "") << fmt17(values[k]);
  out << '\n';
}

inline void write_names(std::ostream& out, const std::vector<std::string>& names) {
  for (std::size_t k = 0; k < names.size(); ++k) out << (k ? "," : "") << names[k];
  out << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Datasets

inline Dataset parse_dataset(std::istream& longitudinal, std::istream& survival,
                             const std::string& long_name = "longitudinal",
                             const std::string& surv_name = "survival") {
  detail::CsvReader sr(survival, surv_name);
  sr.expect_header(kSurvivalHeader);
  std::vector<Subject> subjects;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> f;
  while (sr.next(f)) {
    sr.arity(f, 6);
    Subject s;
    s.id = f[0];
    s.event_time = sr.real(f[1], "event time");
    if (s.event_time < 0.0) sr.fail("event time must be >= 0");
    s.event = sr.binary(f[2], "event");
    s.gender = sr.binary(f[3], "gender");
    s.age = sr.binary(f[4], "age50");
    s.prevoi = sr.binary(f[5], "prevoi");
    if (!index.emplace(s.id, subjects.size()).second) sr.fail("duplicate subject id '" + s.id + "'");
    subjects.push_back(std::move(s));
  }
  if (subjects.empty()) throw ParseError(surv_name + ": no subjects", sr.line());

  detail::CsvReader lr(longitudinal, long_name);
  lr.expect_header(kLongitudinalHeader);
  std::vector<std::vector<std::pair<double, double>>> exams(subjects.size());
  std::vector<std::map<double, std::size_t>> seen(subjects.size());
  while (lr.next(f)) {
    lr.arity(f, 3);
    const auto it = index.find(f[0]);
    if (it == index.end()) lr.fail("subject id '" + f[0] + "' has no survival record");
    const double t = lr.real(f[1], "time");
    if (t < 0.0) lr.fail("exam time must be >= 0");
    const double y = lr.real(f[2], "measurement");
    const auto [pos, fresh] = seen[it->second].emplace(t, lr.line());
    if (!fresh)
      lr.fail("duplicate exam time " + f[1] + " for subject '" + f[0] + "' (first on line " +
              std::to_string(pos->second) + ")");
    exams[it->second].emplace_back(t, y);
  }
  for (std::size_t i = 0; i < subjects.size(); ++i) {
    if (exams[i].empty())
      throw ParseError(surv_name + ": subject id '" + subjects[i].id + "' has no longitudinal rows", 0);
    std::stable_sort(exams[i].begin(), exams[i].end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [t, y] : exams[i]) {
      subjects[i].times.push_back(t);
      subjects[i].y.push_back(y);
    }
  }
  return Dataset(std::move(subjects));
}

inline Dataset read_dataset(const std::string& longitudinal_path, const std::string& survival_path) {
  auto l = detail::open_in(longitudinal_path);
  auto s = detail::open_in(survival_path);
  return parse_dataset(l, s, longitudinal_path, survival_path);
}

inline void write_dataset(const Dataset& data, std::ostream& longitudinal, std::ostream& survival) {
  using detail::fmt17;
  longitudinal << kLongitudinalHeader << '\n';
  survival << kSurvivalHeader << '\n';
  for (const auto& s : data) {
    for (std::size_t j = 0; j < s.n_obs(); ++j)
      longitudinal << s.id << ',' << fmt17(s.times[j]) << ',' << fmt17(s.y[j]) << '\n';
    survival << s.id << ',' << fmt17(s.event_time) << ',' << s.event << ',' << s.gender << ','
             << s.age << ',' << s.prevoi << '\n';
  }
}

inline void write_dataset_files(const Dataset& data, const std::string& longitudinal_path,
                                const std::string& survival_path) {
  auto l = detail::open_out(longitudinal_path);
  auto s = detail::open_out(survival_path);
  write_dataset(data, l, s);
}

// ---------------------------------------------------------------------------
// Draws and pointwise log-likelihoods

inline void write_draws(std::ostream& out, const std::vector<ParameterState>& draws,
                        const ModelSpec& spec, std::size_t n_subjects) {
  detail::write_names(out, state_column_names(spec, n_subjects));
  for (const auto& d : draws) detail::write_row(out, flatten_state(d, spec));
}

inline std::vector<ParameterState> read_draws(std::istream& in, const ModelSpec& spec,
                                              const std::string& name = "draws") {
  detail::CsvReader r(in, name);
  const auto header = r.header();
  const std::size_t n = subjects_in_header(header);
  if (header != state_column_names(spec, n))
    throw ParseError(name + ": header does not match the model spec " + spec.label(), 1);
  std::vector<ParameterState> out;
  std::vector<std::string> f;
  while (r.next(f)) {
    r.arity(f, header.size());
    std::vector<double> values;
    values.reserve(f.size());
    for (const auto& v : f) {
      const auto x = detail::to_double(v);
      if (!x) r.fail("malformed number '" + v + "'");
      values.push_back(*x);
    }
    out.push_back(unflatten_state(values, spec, n));
  }
  return out;
}

inline void write_loglik(std::ostream& out, const Eigen::MatrixXd& loglik,
                         const std::vector<std::string>& subject_ids) {
  if (static_cast<std::size_t>(loglik.cols()) != subject_ids.size())
    throw std::invalid_argument("log-likelihood columns do not match subject ids");
  detail::write_names(out, subject_ids);
  std::vector<double> row(subject_ids.size());
  for (Eigen::Index s = 0; s < loglik.rows(); ++s) {
    for (Eigen::Index i = 0; i < loglik.cols(); ++i) row[static_cast<std::size_t>(i)] = loglik(s, i);
    detail::write_row(out, row);
  }
}

inline std::pair<Eigen::MatrixXd, std::vector<std::string>> read_loglik(
    std::istream& in, const std::string& name = "loglik") {
  detail::CsvReader r(in, name);
  const auto ids = r.header();
  std::vector<std::vector<double>> rows;
  std::vector<std::string> f;
  while (r.next(f)) {
    r.arity(f, ids.size());
    std::vector<double> row;
    for (const auto& v : f) {
      const auto x = detail::to_double(v);
      if (!x) r.fail("malformed number '" + v + "'");
      row.push_back(*x);
    }
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ids.size()));
  for (std::size_t s = 0; s < rows.size(); ++s)
    for (std::size_t i = 0; i < ids.size(); ++i)
      m(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)) = rows[s][i];
  return {std::move(m), ids};
}

inline void write_chain(const PosteriorChain& chain, std::ostream& draws, std::ostream& loglik) {
  write_draws(draws, chain.draws, chain.spec, chain.subject_ids.size());
  write_loglik(loglik, chain.pointwise_loglik, chain.subject_ids);
}

/// Rebuilds the draws, subject ids and log-likelihood matrix of a chain.
inline PosteriorChain read_chain(std::istream& draws, std::istream& loglik, const ModelSpec& spec) {
  PosteriorChain c;
  c.spec = spec;
  c.draws = read_draws(draws, spec);
  auto [m, ids] = read_loglik(loglik);
  if (static_cast<std::size_t>(m.rows()) != c.draws.size())
    throw ParseError("draw and log-likelihood files have different row counts", 0);
  if (!c.draws.empty() && c.draws.front().n_subjects() != ids.size())
    throw ParseError("draw and log-likelihood files disagree on the number of subjects", 0);
  c.pointwise_loglik = std::move(m);
  c.subject_ids = std::move(ids);
  return c;
}

// ---------------------------------------------------------------------------
// Tables

struct WaicRow {
  std::string model;
  WaicResult result;
};

inline void write_waic_table(std::ostream& out, const std::vector<WaicRow>& rows) {
  using detail::fmt17;
  out << "model,lppd,p_waic,waic\n";
  for (const auto& r : rows)
    out << r.model << ',' << fmt17(r.result.lppd) << ',' << fmt17(r.result.p_waic) << ','
        << fmt17(r.result.waic) << '\n';
}

/// Linear-interpolation quantile of sorted values (R's default, type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probability must be in [0, 1]");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct IntervalSummary {
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline IntervalSummary summarize_values(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("cannot summarize an empty sample");
  double sum = 0.0;
  for (double x : v) sum += x;
  std::sort(v.begin(), v.end());
  const double mean = sum / static_cast<double>(v.size());
  return {mean, quantile_sorted(v, 0.025), quantile_sorted(v, 0.975)};
}

struct SummaryRow {
  std::string parameter;
  IntervalSummary stats;
};

/// Every draw-file column plus the covariance elements sigma_b.r.c of the
/// random effects, obtained by inverting Sigma^{-1} draw by draw.
inline std::vector<SummaryRow> summarize(const PosteriorChain& chain) {
  if (chain.size() < 2) throw std::invalid_argument("summaries need at least two draws");
  const auto names = state_column_names(chain.spec, chain.subject_ids.size());
  std::vector<std::vector<double>> cols(names.size());
  const auto p = static_cast<Eigen::Index>(chain.spec.re_dim());
  std::map<std::pair<Eigen::Index, Eigen::Index>, std::vector<double>> cov;
  for (const auto& d : chain.draws) {
    const auto flat = flatten_state(d, chain.spec);
    for (std::size_t k = 0; k < flat.size(); ++k) cols[k].push_back(flat[k]);
    const Eigen::MatrixXd sigma = d.sigma_inv.llt().solve(Eigen::MatrixXd::Identity(p, p));
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = r; c < p; ++c) cov[{r, c}].push_back(0.5 * (sigma(r, c) + sigma(c, r)));
  }
  std::vector<SummaryRow> out;
  for (std::size_t k = 0; k < names.size(); ++k) {
    out.push_back({names[k], summarize_values(cols[k])});
    if (names[k].rfind("sigma_inv.", 0) == 0 && k + 1 < names.size() &&
        names[k + 1].rfind("sigma_inv.", 0) != 0) {
      for (auto& [rc, v] : cov)
        out.push_back({"sigma_b." + std::to_string(rc.first) + "." + std::to_string(rc.second),
                       summarize_values(v)});
    }
  }
  return out;
}

inline void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  using detail::fmt17;
  out << "parameter,mean,lo2.5,hi97.5\n";
  for (const auto& r : rows)
    out << r.parameter << ',' << fmt17(r.stats.mean) << ',' << fmt17(r.stats.lo) << ','
        << fmt17(r.stats.hi) << '\n';
}

struct CurveRow {
  std::size_t g = 0;
  std::string label;  // "coefficient", or "hazard_ratio" for exp(g3)
  double t = 0.0;
  IntervalSummary stats;
};

/// Pointwise posterior mean and 95% equal-tailed band of each spline
/// function on `grid`.
inline std::vector<CurveRow> export_curves(const PosteriorChain& chain, const std::vector<double>& grid) {
  if (chain.size() < 2) throw std::invalid_argument("curves need at least two draws");
  const auto& spec = chain.spec;
  std::vector<CurveRow> out;
  for (std::size_t l = 0; l < 4; ++l) {
    if (!spec.uses_spline(l)) continue;
    const SplineBasis basis(spec.splines[l].t_min, spec.splines[l].t_max, spec.splines[l].intervals);
    std::vector<BasisRow> rows;
    for (double t : grid) rows.push_back(basis.row(t));
    std::vector<CurveRow> ratio;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      std::vector<double> v;
      v.reserve(chain.size());
      for (const auto& d : chain.draws) v.push_back(rows[k].dot(d.gamma[l]));
      out.push_back({l, "coefficient", grid[k], summarize_values(v)});
      if (l == 3) {
        for (double& x : v) x = std::exp(x);
        ratio.push_back({l, "hazard_ratio", grid[k], summarize_values(std::move(v))});
      }
    }
    out.insert(out.end(), ratio.begin(), ratio.end());
  }
  return out;
}

inline void write_curves(std::ostream& out, const std::vector<CurveRow>& rows) {
  using detail::fmt17;
  out << "g,label,t,mean,lo2.5,hi97.5\n";
  for (const auto& r : rows)
    out << 'g' << r.g << ',' << r.label << ',' << fmt17(r.t) << ',' << fmt17(r.stats.mean) << ','
        << fmt17(r.stats.lo) << ',' << fmt17(r.stats.hi) << '\n';
}

}  // namespace jdm

#endif  // JDM_IO_HPP
