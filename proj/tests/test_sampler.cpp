#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "jdm/diagnostics.hpp"
#include "jdm/sampler.hpp"
#include "jdm/simulator.hpp"
#include "mc_support.hpp"

using namespace jdm;

namespace {
ModelSpec traditional() {
  ModelSpec s;
  s.variance = VarianceModel::Common;
  s.linking = Linking::ConstantTraditional;
  s.baseline = Baseline::PSpline;
  return s;
}

Dataset small_cohort(const ModelSpec& spec, std::size_t n, std::uint64_t seed) {
  return simulate_dataset(example_truth(spec), spec, n, {0, 0.5, 1, 1.5, 2, 2.5}, 5.0, seed).data;
}

SamplerConfig short_run(std::size_t iters = 400, std::size_t burn = 200, std::size_t thin = 2) {
  SamplerConfig c;
  c.iterations = iters;
  c.burn_in = burn;
  c.thin = thin;
  c.seed = 99;
  return c;
}
}  // namespace

TEST(SamplerConfig, RetainedCountFollowsFormula) {
  for (std::size_t iters : {10u, 57u, 400u, 1001u})
    for (std::size_t burn : {0u, 3u, 9u})
      for (std::size_t thin : {1u, 2u, 7u}) {
        SamplerConfig c;
        c.iterations = iters;
        c.burn_in = burn;
        c.thin = thin;
        EXPECT_EQ(c.retained(), (iters - burn) / thin);
      }
  SamplerConfig bad;
  bad.burn_in = bad.iterations;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = SamplerConfig{};
  bad.thin = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(RunChain, DrawCountsMatchConfig) {
  const auto spec = traditional();
  const auto data = small_cohort(spec, 6, 1);
  for (auto [it, burn, thin] : {std::tuple{60, 20, 1}, std::tuple{61, 20, 4}, std::tuple{50, 0, 7}}) {
    const auto chain = run_chain(data, spec, short_run(it, burn, thin));
    const auto s = static_cast<std::size_t>((it - burn) / thin);
    EXPECT_EQ(chain.size(), s);
    EXPECT_EQ(chain.pointwise_loglik.rows(), static_cast<Eigen::Index>(s));
    EXPECT_EQ(chain.pointwise_loglik.cols(), 6);
    EXPECT_EQ(chain.subject_ids.size(), 6u);
  }
}

TEST(RunChain, SeededRunsAreBitIdentical) {
  for (const auto& spec : {traditional(), ModelSpec{}}) {
    const auto data = small_cohort(spec, 8, 2);
    const auto a = run_chain(data, spec, short_run());
    const auto b = run_chain(data, spec, short_run());
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t s = 0; s < a.size(); ++s) EXPECT_TRUE(a.draws[s] == b.draws[s]);
    EXPECT_TRUE(a.pointwise_loglik == b.pointwise_loglik);
    auto other = short_run();
    other.seed = 100;
    const auto c = run_chain(data, spec, other);
    EXPECT_FALSE(a.draws.back() == c.draws.back());
    EXPECT_FALSE(a.draws.back() == run_chain(data, spec, short_run(), 1).draws.back());
  }
}

TEST(RunChain, ParallelChainsMatchSerialOnes) {
  const auto spec = traditional();
  const auto data = small_cohort(spec, 5, 3);
  const auto chains = run_chains(data, spec, short_run(), 3);
  for (std::size_t c = 0; c < 3; ++c)
    EXPECT_TRUE(chains[c].draws.back() == run_chain(data, spec, short_run(), c).draws.back());
}

TEST(RunChain, Preconditions) {
  const auto spec = traditional();
  EXPECT_THROW(run_chain(Dataset{}, spec, short_run()), FitError);
  auto bad = spec;
  bad.splines[0].intervals = 0;
  EXPECT_THROW(run_chain(small_cohort(spec, 3, 4), bad, short_run()), FitError);
  auto narrow = spec;
  narrow.splines[0].t_max = 0.01;
  EXPECT_THROW(run_chain(small_cohort(spec, 3, 4), narrow, short_run()), FitError);
  EXPECT_THROW(run_chain(small_cohort(spec, 3, 4), spec, short_run(10, 10, 1)), std::invalid_argument);
}

TEST(RunChain, StoredLoglikMatchesRecomputation) {
  for (const auto& base : enumerate_models()) {
    if (base.variance != VarianceModel::CovariateDispersion && base.linking != Linking::ConstantTraditional)
      continue;
    const auto data = small_cohort(base, 5, 5);
    const auto chain = run_chain(data, base, short_run(80, 40, 10));
    for (std::size_t s = 0; s < chain.size(); ++s) {
      const auto pw = pointwise_loglik(chain.draws[s], data, base);
      for (std::size_t i = 0; i < pw.size(); ++i)
        EXPECT_NEAR(chain.pointwise_loglik(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(i)), pw[i],
                    1e-10 * (1 + std::abs(pw[i])))
            << base.label();
    }
  }
}

TEST(RunChain, FrozenBlocksStayPutAndReportNoStats) {
  const auto spec = traditional();
  const auto data = small_cohort(spec, 4, 6);
  auto cfg = short_run();
  cfg.frozen = {Block::Beta1, Block::SigmaInv};
  auto init = initial_state(data, spec);
  init.beta1[0] = 11.0;
  cfg.initial = init;
  const auto chain = run_chain(data, spec, cfg);
  for (const auto& d : chain.draws) {
    EXPECT_EQ(d.beta1, init.beta1);
    EXPECT_EQ(d.sigma_inv, init.sigma_inv);
  }
  for (const auto& st : chain.acceptance) {
    EXPECT_NE(st.name, "beta1");
    EXPECT_NE(st.name, "sigma_inv");
    EXPECT_GT(st.proposed, 0u);
  }
}

TEST(BlockStats, RateOfAllRejectedBlockIsZero) {
  EXPECT_EQ((BlockStats{"x", 40, 0}.rate()), 0.0);
  EXPECT_EQ((BlockStats{"x", 0, 0}.rate()), 0.0);
  EXPECT_EQ((BlockStats{"x", 4, 1}.rate()), 0.25);
}

// One subject, random effects and residual scale fixed: beta1 has a
// Gaussian full posterior available in closed form.
TEST(RunChain, ConjugateLinearReduction) {
  const auto spec = traditional();
  Subject s;
  s.id = "only";
  s.event_time = 3.0;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> z;
  s.gender = 1;
  for (int j = 0; j < 12; ++j) {
    s.times.push_back(0.25 * j);
    s.y.push_back(16 + 1.5 * s.times.back() + z(rng));
  }
  const Dataset data({s});
  auto init = make_state(spec, 1);
  init.b.row(0) << 0.7, -0.2;
  init.log_sigma0 = std::log(0.8);
  SamplerConfig cfg;
  cfg.iterations = 60000;
  cfg.burn_in = 10000;
  cfg.thin = 5;
  cfg.seed = 5;
  cfg.initial = init;
  cfg.frozen = {Block::Beta2, Block::Beta3, Block::LinkConst, Block::RandomEffects, Block::SigmaInv,
                Block::ResidualScale, Block::HalfCauchyScale, Block::Splines, Block::Smoothing,
                Block::Lambda, Block::Rho};
  const auto chain = run_chain(data, spec, cfg);

  Eigen::MatrixXd x(12, 5);
  Eigen::VectorXd r(12);
  for (int j = 0; j < 12; ++j) {
    x.row(j) << 1, s.times[j], 1, 0, 0;
    r[j] = s.y[j] - 0.7 + 0.2 * s.times[j];
  }
  const double var = 0.64;
  const Eigen::MatrixXd prec = x.transpose() * x / var + Eigen::MatrixXd::Identity(5, 5) / 100.0;
  const Eigen::MatrixXd cov = prec.inverse();
  const Eigen::VectorXd mean = cov * x.transpose() * r / var;
  for (int k = 0; k < 5; ++k) {
    const auto draws = mc::extract(chain, [k](const ParameterState& d) { return d.beta1[k]; });
    const auto m = mc::check_mean(draws, mean[k]);
    EXPECT_LT(std::abs(m.z), 4.0) << "beta1[" << k << "] mean " << m.mean << " vs " << mean[k];
    const auto v = mc::check_mean(mc::centred_squares(draws, mean[k]), cov(k, k));
    EXPECT_LT(std::abs(v.z), 4.0) << "beta1[" << k << "] var " << v.mean << " vs " << cov(k, k);
  }
}

class PriorSampling : public ::testing::TestWithParam<SigmaPrior> {};

TEST_P(PriorSampling, MomentsMatchAnalyticPrior) {
  const auto spec = mc::geweke_spec(GetParam());
  SamplerConfig cfg;
  // the 23-dimensional spline blocks need a long adaptation phase under the vague level prior
  cfg.burn_in = 100000;
  cfg.thin = 20;
  cfg.iterations = cfg.burn_in + 6000 * cfg.thin;
  cfg.seed = 2024;
  const auto chain = sample_prior(spec, cfg);
  EXPECT_EQ(chain.pointwise_loglik.cols(), 1);
  EXPECT_TRUE((chain.pointwise_loglik.array() == 0.0).all());
  for (const auto& m : mc::prior_moments(spec)) {
    const auto c = mc::check_mean(mc::extract(chain, m.f), m.expected);
    EXPECT_LT(std::abs(c.z), 4.0) << m.name << ": " << c.mean << " vs " << m.expected << " (mcse " << c.mcse << ")";
  }
}

INSTANTIATE_TEST_SUITE_P(Families, PriorSampling,
                         ::testing::Values(SigmaPrior::LogUniform, SigmaPrior::InvGamma, SigmaPrior::HalfCauchy));

TEST(Diagnostics, WhiteNoiseEssIsNearLength) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> x(5000);
    for (auto& v : x) v = z(rng);
    const auto e = effective_sample_size(x);
    EXPECT_FALSE(e.degenerate);
    EXPECT_NEAR(e.ess, 5000.0, 1000.0);
  }
}

TEST(Diagnostics, Ar1EssMatchesTheory) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> z;
  const double phi = 0.8;
  std::vector<double> x(100000);
  double v = 0.0;
  for (auto& xi : x) xi = v = phi * v + z(rng);
  const double expected = 100000.0 * (1 - phi) / (1 + phi);
  EXPECT_NEAR(effective_sample_size(x).ess / expected, 1.0, 0.15);
}

TEST(Diagnostics, ConstantChainIsDegenerate) {
  const auto e = effective_sample_size(std::vector<double>(100, 3.25));
  EXPECT_TRUE(e.degenerate);
  EXPECT_EQ(e.ess, 1.0);
}

TEST(Diagnostics, ChainReportNeedsTenDraws) {
  const auto spec = traditional();
  const auto data = small_cohort(spec, 3, 10);
  EXPECT_THROW(chain_diagnostics(run_chain(data, spec, short_run(30, 20, 2))), std::invalid_argument);
  const auto chain = run_chain(data, spec, short_run(60, 20, 2));
  const auto rep = chain_diagnostics(chain);
  EXPECT_EQ(rep.parameters.size(), state_column_names(spec, 3).size());
  EXPECT_EQ(rep.acceptance.size(), chain.acceptance.size());
  for (const auto& p : rep.parameters) EXPECT_GE(p.ess, 1.0);
}

TEST(Diagnostics, Psrf) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> same(4, std::vector<double>(2000));
  for (auto& c : same)
    for (auto& v : c) v = z(rng);
  EXPECT_NEAR(psrf(same), 1.0, 0.01);
  auto shifted = same;
  for (auto& v : shifted[0]) v += 3.0;
  EXPECT_GT(psrf(shifted), 1.2);
  EXPECT_THROW(psrf({same[0]}), std::invalid_argument);
}
