#ifndef JDM_SPEC_CONFIG_HPP
#define JDM_SPEC_CONFIG_HPP

// Plain-text model specification files: `key = value` lines, `#` comments.
// See docs/spec_config.md for the key list.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "jdm/errors.hpp"
#include "jdm/model.hpp"

namespace jdm {

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Shortest text that parses back to exactly `v` is not needed; 17
/// significant digits always round-trip and keep output byte-stable.
inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<long long> to_integer(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace detail

inline ModelSpec parse_spec(std::istream& in) {
  struct Entry {
    std::string value;
    std::size_t line;
  };
  std::map<std::string, Entry> entries;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError("missing key", line_no);
    if (value.empty()) throw ParseError("missing value for '" + key + "'", line_no);
    if (!entries.emplace(key, Entry{value, line_no}).second)
      throw ParseError("duplicate key '" + key + "'", line_no);
  }

  ModelSpec spec;
  auto& pr = spec.priors;
  const auto number = [](const Entry& e, const std::string& key) {
    const auto v = detail::to_double(e.value);
    if (!v) throw ParseError("'" + key + "' expects a number, got '" + e.value + "'", e.line);
    return *v;
  };
  const auto count = [](const Entry& e, const std::string& key) {
    const auto v = detail::to_integer(e.value);
    if (!v || *v <= 0) throw ParseError("'" + key + "' expects a positive integer", e.line);
    return static_cast<std::size_t>(*v);
  };
  const auto enum_value = [](const Entry& e, const std::string& key, auto parsed) {
    if (!parsed) throw ParseError("unknown value '" + e.value + "' for '" + key + "'", e.line);
    return *parsed;
  };

  std::map<std::string, double*> reals{
      {"prior.beta_variance", &pr.beta_variance},
      {"prior.wishart_scale", &pr.wishart_scale},
      {"prior.wishart_df", &pr.wishart_df},
      {"prior.smooth_shape", &pr.smooth.shape},
      {"prior.smooth_rate", &pr.smooth.rate},
      {"prior.lambda_shape", &pr.lambda.shape},
      {"prior.lambda_rate", &pr.lambda.rate},
      {"prior.rho_shape", &pr.rho.shape},
      {"prior.rho_rate", &pr.rho.rate},
      {"prior.log_uniform_bound", &pr.log_uniform_bound},
      {"prior.inv_gamma_eps", &pr.inv_gamma_eps},
      {"prior.half_cauchy_upper", &pr.half_cauchy_upper},
      {"prior.first_coef_variance", &pr.first_coef_variance},
      {"prior.link_const_variance", &pr.link_const_variance},
  };

  // shared spline settings first, per-function overrides second
  for (const auto& [key, e] : entries) {
    if (key == "spline.t_min") for (auto& c : spec.splines) c.t_min = number(e, key);
    else if (key == "spline.t_max") for (auto& c : spec.splines) c.t_max = number(e, key);
    else if (key == "spline.intervals") for (auto& c : spec.splines) c.intervals = count(e, key);
  }
  for (const auto& [key, e] : entries) {
    if (key.rfind("spline.", 0) == 0) {
      if (key != "spline.t_min" && key != "spline.t_max" && key != "spline.intervals")
        throw ParseError("unknown key '" + key + "'", e.line);
    } else if (key == "variance") {
      spec.variance = enum_value(e, key, parse_variance_model(e.value));
    } else if (key == "linking") {
      spec.linking = enum_value(e, key, parse_linking(e.value));
    } else if (key == "baseline") {
      spec.baseline = enum_value(e, key, parse_baseline(e.value));
    } else if (key == "prior.sigma") {
      pr.sigma_prior = enum_value(e, key, parse_sigma_prior(e.value));
    } else if (auto it = reals.find(key); it != reals.end()) {
      *it->second = number(e, key);
    } else if (key == "piecewise.grid") {
      std::vector<double> grid;
      std::stringstream ss(e.value);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const auto v = detail::to_double(item);
        if (!v) throw ParseError("bad breakpoint '" + item + "' in piecewise.grid", e.line);
        grid.push_back(*v);
      }
      spec.piecewise_grid = std::move(grid);
    } else if (key.size() > 3 && key[0] == 'g' && key[1] >= '0' && key[1] <= '3' && key[2] == '.') {
      auto& c = spec.splines[static_cast<std::size_t>(key[1] - '0')];
      const std::string field = key.substr(3);
      if (field == "t_min") c.t_min = number(e, key);
      else if (field == "t_max") c.t_max = number(e, key);
      else if (field == "intervals") c.intervals = count(e, key);
      else throw ParseError("unknown key '" + key + "'", e.line);
    } else {
      throw ParseError("unknown key '" + key + "'", e.line);
    }
  }
  if (const auto problems = validate_spec(spec); !problems.empty())
    throw ParseError("invalid model spec: " + problems.front(), 0);
  return spec;
}

inline ModelSpec parse_spec_string(const std::string& text) {
  std::istringstream in(text);
  return parse_spec(in);
}

inline ModelSpec read_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open spec file '" + path + "'");
  return parse_spec(in);
}

/// Every key, explicit per-function spline settings; parse_spec(write_spec(s)) == s.
inline void write_spec(std::ostream& out, const ModelSpec& spec) {
  using detail::fmt17;
  const auto& pr = spec.priors;
  out << "variance = " << to_string(spec.variance) << '\n'
      << "linking = " << to_string(spec.linking) << '\n'
      << "baseline = " << to_string(spec.baseline) << '\n';
  for (std::size_t l = 0; l < 4; ++l) {
    const auto& c = spec.splines[l];
    out << 'g' << l << ".t_min = " << fmt17(c.t_min) << '\n'
        << 'g' << l << ".t_max = " << fmt17(c.t_max) << '\n'
        << 'g' << l << ".intervals = " << c.intervals << '\n';
  }
  out << "piecewise.grid = ";
  for (std::size_t k = 0; k < spec.piecewise_grid.size(); ++k)
    out << (k ? "," : "") << fmt17(spec.piecewise_grid[k]);
  out << '\n'
      << "prior.sigma = " << to_string(pr.sigma_prior) << '\n'
      << "prior.beta_variance = " << fmt17(pr.beta_variance) << '\n'
      << "prior.wishart_scale = " << fmt17(pr.wishart_scale) << '\n'
      << "prior.wishart_df = " << fmt17(pr.wishart_df) << '\n'
      << "prior.smooth_shape = " << fmt17(pr.smooth.shape) << '\n'
      << "prior.smooth_rate = " << fmt17(pr.smooth.rate) << '\n'
      << "prior.lambda_shape = " << fmt17(pr.lambda.shape) << '\n'
      << "prior.lambda_rate = " << fmt17(pr.lambda.rate) << '\n'
      << "prior.rho_shape = " << fmt17(pr.rho.shape) << '\n'
      << "prior.rho_rate = " << fmt17(pr.rho.rate) << '\n'
      << "prior.log_uniform_bound = " << fmt17(pr.log_uniform_bound) << '\n'
      << "prior.inv_gamma_eps = " << fmt17(pr.inv_gamma_eps) << '\n'
      << "prior.half_cauchy_upper = " << fmt17(pr.half_cauchy_upper) << '\n'
      << "prior.first_coef_variance = " << fmt17(pr.first_coef_variance) << '\n'
      << "prior.link_const_variance = " << fmt17(pr.link_const_variance) << '\n';
}

}  // namespace jdm

#endif  // JDM_SPEC_CONFIG_HPP
