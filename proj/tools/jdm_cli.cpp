// Command-line front end: simulate, fit, compare, summarize, curves.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jdm/jdm.hpp"

namespace fs = std::filesystem;
using namespace jdm;

namespace {

struct Common {
  std::string spec_path;
  std::uint64_t seed = 1;
  std::size_t iters = 500000;
  std::size_t burnin = 250000;
  std::size_t thin = 25;
  std::size_t chains = 1;
  std::string out = ".";
  std::string data_dir;
};

ModelSpec load_spec(const std::string& path) { return path.empty() ? ModelSpec{} : read_spec_file(path); }

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = detail::to_double(item);
    if (!v) throw std::invalid_argument("bad number '" + item + "' in list");
    out.push_back(*v);
  }
  return out;
}

/// "a:b:step" or a comma list.
std::vector<double> parse_grid(const std::string& text) {
  if (text.find(':') == std::string::npos) return parse_list(text);
  std::vector<double> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) {
    const auto v = detail::to_double(item);
    if (!v) throw std::invalid_argument("bad grid '" + text + "'");
    parts.push_back(*v);
  }
  if (parts.size() != 3 || !(parts[2] > 0.0) || parts[1] < parts[0])
    throw std::invalid_argument("grid must be start:stop:step");
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) grid.push_back(std::min(parts[0] + static_cast<double>(k) * parts[2], parts[1]));
  return grid;
}

SamplerConfig sampler_config(const Common& c) {
  SamplerConfig cfg;
  cfg.iterations = c.iters;
  cfg.burn_in = c.burnin;
  cfg.thin = c.thin;
  cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

Dataset load_data(const Common& c) {
  const fs::path dir = c.data_dir.empty() ? fs::path(".") : fs::path(c.data_dir);
  return read_dataset((dir / "longitudinal.csv").string(), (dir / "survival.csv").string());
}

void warn_sparse_subjects(const Dataset& data, const ModelSpec& spec) {
  if (!spec.per_subject_sigma()) return;
  std::size_t sparse = 0;
  for (const auto& s : data)
    if (s.n_obs() < 3) ++sparse;
  if (sparse)
    std::cerr << "warning: " << sparse
              << " subject(s) have fewer than 3 measurements; their sigma_i is weakly identified under "
              << to_string(spec.variance) << '\n';
}

void write_acceptance(const fs::path& path, const PosteriorChain& chain) {
  auto out = detail::open_out(path.string());
  out << "block,proposed,accepted,rate\n";
  for (const auto& a : chain.acceptance)
    out << a.name << ',' << a.proposed << ',' << a.accepted << ',' << detail::fmt17(a.rate()) << '\n';
  out << "clamp.dispersion," << chain.clamps.dispersion << ",,\n";
  out << "clamp.hazard," << chain.clamps.hazard << ",,\n";
}

int cmd_simulate(const Common& c, std::size_t n, double censor, const std::string& exams,
                 std::optional<double> log_sigma_sd, double jitter, const std::string& truth_path) {
  const ModelSpec spec = load_spec(c.spec_path);
  ParameterState truth = example_truth(spec, 0);
  if (!truth_path.empty()) {
    auto in = detail::open_in(truth_path);
    const auto rows = read_draws(in, spec, truth_path);
    if (rows.size() != 1) throw std::invalid_argument("truth file must hold exactly one row");
    truth = rows.front();
  }
  SimulationOptions opts;
  opts.exchangeable_log_sigma_sd = log_sigma_sd;
  opts.exam_jitter = jitter;
  const auto cohort = simulate_dataset(truth, spec, n, parse_list(exams), censor, c.seed, opts);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  write_dataset_files(cohort.data, (dir / "longitudinal.csv").string(), (dir / "survival.csv").string());
  auto t = detail::open_out((dir / "truth.csv").string());
  write_draws(t, {cohort.truth}, spec, n);
  auto s = detail::open_out((dir / "spec.cfg").string());
  write_spec(s, spec);
  std::cout << "simulated " << n << " subjects into " << dir.string() << '\n';
  return 0;
}

int cmd_fit(const Common& c) {
  const ModelSpec spec = load_spec(c.spec_path);
  const Dataset data = load_data(c);
  warn_sparse_subjects(data, spec);
  const SamplerConfig cfg = sampler_config(c);
  const auto chains = run_chains(data, spec, cfg, c.chains);
  const fs::path dir(c.out);
  fs::create_directories(dir);
  std::vector<WaicRow> rows;
  for (std::size_t k = 0; k < chains.size(); ++k) {
    const std::string suffix = chains.size() == 1 ? "" : "_chain" + std::to_string(k + 1);
    auto d = detail::open_out((dir / ("draws" + suffix + ".csv")).string());
    auto l = detail::open_out((dir / ("loglik" + suffix + ".csv")).string());
    write_chain(chains[k], d, l);
    write_acceptance(dir / ("acceptance" + suffix + ".csv"), chains[k]);
    rows.push_back({spec.label() + suffix, compute_waic(chains[k].pointwise_loglik)});
  }
  auto w = detail::open_out((dir / "waic.csv").string());
  write_waic_table(w, rows);
  if (chains.size() > 1) {
    auto p = detail::open_out((dir / "psrf.csv").string());
    p << "parameter,psrf\n";
    for (const auto& [name, r] : psrf_table(chains)) p << name << ',' << detail::fmt17(r) << '\n';
  }
  auto s = detail::open_out((dir / "spec.cfg").string());
  write_spec(s, spec);
  std::cout << "fitted " << spec.label() << ": " << chains.front().size() << " draws per chain\n";
  return 0;
}

int cmd_compare(const Common& c, bool list, const std::string& models) {
  const ModelSpec base = load_spec(c.spec_path);
  std::vector<ModelSpec> specs = enumerate_models(base);
  if (list) {
    for (const auto& s : specs) std::cout << s.label() << '\n';
    return 0;
  }
  if (!models.empty()) {
    std::vector<ModelSpec> chosen;
    std::stringstream ss(models);
    std::string label;
    while (std::getline(ss, label, ',')) {
      const auto it = std::find_if(specs.begin(), specs.end(), [&](const ModelSpec& s) { return s.label() == label; });
      if (it == specs.end()) throw std::invalid_argument("unknown model '" + label + "' (see compare --list)");
      chosen.push_back(*it);
    }
    specs = std::move(chosen);
  }
  const Dataset data = load_data(c);
  const SamplerConfig cfg = sampler_config(c);
  std::vector<WaicRow> rows;
  for (const auto& spec : specs) {
    std::cerr << "fitting " << spec.label() << '\n';
    const auto chain = run_chain(data, spec, cfg);
    rows.push_back({spec.label(), compute_waic(chain.pointwise_loglik)});
  }
  const fs::path dir(c.out);
  fs::create_directories(dir);
  auto w = detail::open_out((dir / "waic.csv").string());
  write_waic_table(w, rows);
  write_waic_table(std::cout, rows);
  return 0;
}

PosteriorChain load_chain(const Common& c, const std::string& draws_path) {
  PosteriorChain chain;
  chain.spec = load_spec(c.spec_path);
  auto in = detail::open_in(draws_path);
  chain.draws = read_draws(in, chain.spec, draws_path);
  const std::size_t n = chain.draws.empty() ? 0 : chain.draws.front().n_subjects();
  for (std::size_t i = 0; i < n; ++i) chain.subject_ids.push_back(std::to_string(i));
  return chain;
}

int cmd_summarize(const Common& c, const std::string& draws_path) {
  const auto chain = load_chain(c, draws_path);
  const auto rows = summarize(chain);
  if (c.out == "-") {
    write_summary(std::cout, rows);
  } else {
    auto out = detail::open_out(c.out);
    write_summary(out, rows);
  }
  return 0;
}

int cmd_curves(const Common& c, const std::string& draws_path, const std::string& grid) {
  const auto chain = load_chain(c, draws_path);
  const auto rows = export_curves(chain, parse_grid(grid));
  if (c.out == "-") {
    write_curves(std::cout, rows);
  } else {
    auto out = detail::open_out(c.out);
    write_curves(out, rows);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian joint longitudinal-survival dispersion models"};
  app.require_subcommand(1);
  Common c;

  const auto add_spec = [&](CLI::App* sub) {
    sub->add_option("--spec", c.spec_path, "model specification file (defaults if omitted)");
  };
  const auto add_sampler = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "random seed");
    sub->add_option("--iters", c.iters, "total iterations");
    sub->add_option("--burnin", c.burnin, "burn-in iterations");
    sub->add_option("--thin", c.thin, "keep every k-th iteration");
    sub->add_option("--data", c.data_dir, "directory with longitudinal.csv and survival.csv");
  };

  auto* sim = app.add_subcommand("simulate", "simulate a cohort from a model spec");
  add_spec(sim);
  sim->add_option("--seed", c.seed, "random seed");
  sim->add_option("--out", c.out, "output directory");
  std::size_t n = 200;
  double censor = 5.0, jitter = 0.0;
  std::string exams = "0,0.5,1,1.5,2,2.5", truth_path;
  std::optional<double> log_sigma_sd;
  sim->add_option("--n", n, "number of subjects");
  sim->add_option("--censor", censor, "administrative censoring time (years)");
  sim->add_option("--exams", exams, "comma-separated exam schedule (years)");
  sim->add_option("--jitter", jitter, "half-width of uniform exam-time jitter");
  sim->add_option("--log-sigma-sd", log_sigma_sd, "SD of log sigma_i around log sigma_0 (EXCHANGEABLE)");
  sim->add_option("--truth", truth_path, "one-row draw file with the generating parameters");

  auto* fit = app.add_subcommand("fit", "fit one model");
  add_spec(fit);
  add_sampler(fit);
  fit->add_option("--chains", c.chains, "number of chains");
  fit->add_option("--out", c.out, "output directory");

  auto* cmp = app.add_subcommand("compare", "fit the model lattice and tabulate WAIC");
  add_spec(cmp);
  add_sampler(cmp);
  cmp->add_option("--chains", c.chains, "number of chains (first chain is scored)");
  cmp->add_option("--out", c.out, "output directory");
  bool list = false;
  std::string models;
  cmp->add_flag("--list", list, "print the model labels and exit");
  cmp->add_option("--models", models, "comma-separated subset of labels");

  std::string draws_path, grid = "0:5:0.1";
  auto* sum = app.add_subcommand("summarize", "posterior means and 95% intervals");
  add_spec(sum);
  sum->add_option("--draws", draws_path, "draw file")->required();
  sum->add_option("--out", c.out, "output CSV ('-' for stdout)");

  auto* crv = app.add_subcommand("curves", "posterior bands of the spline functions");
  add_spec(crv);
  crv->add_option("--draws", draws_path, "draw file")->required();
  crv->add_option("--grid", grid, "start:stop:step or comma list");
  crv->add_option("--out", c.out, "output CSV ('-' for stdout)");

  CLI11_PARSE(app, argc, argv);
  if ((sum->parsed() || crv->parsed()) && c.out == ".") c.out = "-";

  try {
    if (sim->parsed()) return cmd_simulate(c, n, censor, exams, log_sigma_sd, jitter, truth_path);
    if (fit->parsed()) return cmd_fit(c);
    if (cmp->parsed()) return cmd_compare(c, list, models);
    if (sum->parsed()) return cmd_summarize(c, draws_path);
    if (crv->parsed()) return cmd_curves(c, draws_path, grid);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
