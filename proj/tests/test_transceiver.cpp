#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "isac/feature_model.hpp"
#include "isac/sim.hpp"
#include "isac/transceiver.hpp"
#include "oracles.hpp"

using namespace isac;

namespace {

struct DefaultLink {
  FeatureModel model = make_synthetic_model({});
  SensingConfig sensing{0.1, 1.0};
  LinkStatistics stats = link_statistics(model, sensing, GapAggregation::worst_pair);
};

oracle::Instance to_instance(const ChannelRealization& ch, const LinkStatistics& s, double power) {
  return {std::vector<double>(ch.gains().begin(), ch.gains().end()), s.second_moments, s.variances, s.squared_gaps,
          ch.noise_power(), power};
}

std::vector<double> powers_of(const TransceiverDesign& d) {
  std::vector<double> p;
  for (double b : d.precoders) p.push_back(b * b);
  return p;
}

ChannelRealization rayleigh(std::size_t n, double noise, std::mt19937_64& gen) {
  return sample_channel(RayleighUnit{}, n, noise, gen);
}

}  // namespace

TEST(MmseScaling, Examples) {
  EXPECT_DOUBLE_EQ(mmse_scaling(1.0, 1.0, 1.0, 1.0), 0.5);
  EXPECT_DOUBLE_EQ(mmse_scaling(3.0, 0.0, 1.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(mmse_scaling(2.0, 1.0, 1.0, 0.1), 2.0 / 4.1);
}

TEST(MmseScaling, MinimisesMseOnGrid) {
  // E(a y - x)^2 with y = h b x + w: a^2 (h^2 b^2 nu2 + s) - 2 a h b nu2 + nu2.
  const double h = 2.0, b = 1.0, nu2 = 1.0, s = 0.1;
  auto mse = [&](double a) { return a * a * (h * h * b * b * nu2 + s) - 2 * a * h * b * nu2 + nu2; };
  // A flat minimum pins the argmin only to about sqrt(machine epsilon).
  EXPECT_NEAR(oracle::grid_argmin(mse, -2.0, 2.0), mmse_scaling(h, b, nu2, s), 1e-7);
}

TEST(SingleCarrierMse, Examples) {
  const auto d = single_carrier_mse_design(1.0, 1.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(d.mse, 0.5);
  EXPECT_DOUBLE_EQ(d.precoder, 1.0);
  EXPECT_DOUBLE_EQ(d.scaling, 0.5);
  EXPECT_LT(single_carrier_mse_design(1.0, 1.0, 1.0, 1e12).mse, 1e-11);
  EXPECT_THROW(single_carrier_mse_design(1.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST(SingleCarrierMse, MatchesGridSearchOverPrecoder) {
  const double h = 0.7, nu2 = 2.0, s = 0.1, pc = 3.0;
  // Minimum MSE for a given b (Wiener receiver), searched over feasible b.
  auto mse_of_b = [&](double b) { return nu2 * s / (h * h * b * b * nu2 + s); };
  const double bmax = std::sqrt(pc / nu2);
  const double b_star = oracle::grid_argmin(mse_of_b, 0.0, bmax);
  const auto d = single_carrier_mse_design(h, nu2, s, pc);
  EXPECT_NEAR(d.mse, mse_of_b(b_star), 1e-6);
  EXPECT_NEAR(d.precoder, bmax, 1e-12);
}

TEST(SingleCarrierDg, Limits) {
  EXPECT_NEAR(single_carrier_dg(1.0, 1e14, 4.0, 2.0, 3.0, 0.1), 2.0, 1e-10);
  EXPECT_EQ(single_carrier_dg(1.0, 0.0, 4.0, 2.0, 3.0, 0.1), 0.0);
}

TEST(SingleCarrierDg, ExampleAndGridCheck) {
  const double h = 1.0, pc = 1.0, gap2 = 4.0, var = 1.0, nu2 = 2.0, s = 1.0;
  EXPECT_DOUBLE_EQ(single_carrier_dg(h, pc, gap2, var, nu2, s), 4.0 / 3.0);
  auto neg_dg = [&](double b) { return -(h * h * b * b * gap2 / (h * h * b * b * var + s)); };
  const double b_star = oracle::grid_argmin(neg_dg, 0.0, std::sqrt(pc / nu2));
  EXPECT_NEAR(-neg_dg(b_star), 4.0 / 3.0, 1e-9);
}

TEST(WaterfillMse, SymmetricSplit) {
  const ChannelRealization ch({0.8, 0.8}, 0.1);
  const std::vector<double> nu2{2.0, 2.0}, var{1.0, 1.0};
  const auto d = waterfill_mse(ch, nu2, var, 1.5);
  EXPECT_NEAR(d.precoders[0], d.precoders[1], 1e-12);
  EXPECT_NEAR(transmit_power(d, nu2), 1.5, 1e-12);
}

TEST(WaterfillMse, SingleCarrierReducesToClosedForm) {
  const ChannelRealization ch({0.6}, 0.2);
  const std::vector<double> nu2{1.7}, var{1.1};
  const auto d = waterfill_mse(ch, nu2, var, 2.0);
  EXPECT_NEAR(d.precoders[0], single_carrier_mse_design(0.6, 1.7, 0.2, 2.0).precoder, 1e-12);
}

TEST(WaterfillMse, MatchesProjectedGradientOnDefaultModel) {
  const DefaultLink link;
  std::mt19937_64 gen(8);
  const auto ch = rayleigh(8, 0.1, gen);
  const auto d = waterfill_mse(ch, link.stats.second_moments, link.stats.variances, 1.0);
  const auto in = to_instance(ch, link.stats, 1.0);
  const double got = oracle::mse_objective(in, powers_of(d));
  const double ref = oracle::mse_objective(in, oracle::solve_p1(in));
  EXPECT_NEAR(got, ref, 1e-5 * ref);
  EXPECT_LE(got, ref * (1 + 1e-12));
}

TEST(WaterfillMse, Errors) {
  const std::vector<double> nu2{1.0, 1.0}, var{1.0, 1.0};
  EXPECT_THROW(waterfill_mse(ChannelRealization({0.0, 0.0}, 0.1), nu2, var, 1.0), std::invalid_argument);
  EXPECT_THROW(waterfill_mse(ChannelRealization({1.0, 1.0}, 0.1), nu2, var, 0.0), std::invalid_argument);
  EXPECT_THROW(waterfill_mse(ChannelRealization({1.0}, 0.1), nu2, var, 1.0), std::invalid_argument);
}

TEST(WaterfillMse, TinyGainsAreExcluded) {
  const ChannelRealization ch({1.0, 1e-13}, 0.1);
  const std::vector<double> nu2{1.0, 1.0}, var{1.0, 1.0};
  const auto d = waterfill_mse(ch, nu2, var, 1.0);
  EXPECT_EQ(d.precoders[1], 0.0);
  EXPECT_NEAR(transmit_power(d, nu2), 1.0, 1e-12);
}

TEST(WaterfillDg, UninformativeFeatureGetsNothing) {
  const ChannelRealization ch({1.0, 1.0}, 0.1);
  const std::vector<double> nu2{2.0, 1.0}, var{1.0, 1.0}, gaps{1.0, 0.0};
  const auto d = waterfill_dg(ch, nu2, var, gaps, 1.0);
  EXPECT_EQ(d.precoders[1], 0.0);
  EXPECT_NEAR(d.precoders[0] * d.precoders[0] * nu2[0], 1.0, 1e-12);
}

TEST(WaterfillDg, AllGapsZeroIsDegenerate) {
  const ChannelRealization ch({1.0, 1.0}, 0.1);
  const std::vector<double> nu2{2.0, 1.0}, var{1.0, 1.0}, gaps{0.0, 0.0};
  const auto d = waterfill_dg(ch, nu2, var, gaps, 1.0);
  EXPECT_EQ(d.status, DesignStatus::uninformative);
  EXPECT_EQ(d.active_count(), 0u);
}

TEST(WaterfillDg, SingleCarrierMatchesClosedFormDg) {
  const double h = 0.9, nu2 = 2.5, var = 1.2, gap2 = 3.0, s = 0.3, pc = 0.8;
  const ChannelRealization ch({h}, s);
  const std::vector<double> nu{nu2}, v{var}, g{gap2};
  const auto d = waterfill_dg(ch, nu, v, g, pc);
  EXPECT_NEAR(achieved_dg(d, ch, v, g).total, single_carrier_dg(h, pc, gap2, var, nu2, s), 1e-12);
}

TEST(WaterfillDg, MatchesProjectedGradientOnDefaultModel) {
  const DefaultLink link;
  std::mt19937_64 gen(9);
  const auto ch = rayleigh(8, 0.1, gen);
  const auto d = waterfill_dg(ch, link.stats.second_moments, link.stats.variances, link.stats.squared_gaps, 0.5);
  const auto in = to_instance(ch, link.stats, 0.5);
  const double got = oracle::dg_objective(in, powers_of(d));
  const double ref = oracle::dg_objective(in, oracle::solve_p2(in));
  EXPECT_NEAR(got, ref, 1e-5 * ref);
  EXPECT_GE(got, ref * (1 - 1e-12));
}

TEST(WaterfillProperties, KktPowerAndDominanceOnRandomChannels) {
  const DefaultLink link;
  std::mt19937_64 gen(10);
  std::uniform_real_distribution<double> log_power(-1.0, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ch = rayleigh(8, 0.1, gen);
    const double pc = std::pow(10.0, log_power(gen));
    const auto& s = link.stats;
    const auto mse = waterfill_mse(ch, s.second_moments, s.variances, pc);
    const auto dg = waterfill_dg(ch, s.second_moments, s.variances, s.squared_gaps, pc);
    const auto in = to_instance(ch, s, pc);

    EXPECT_NEAR(transmit_power(mse, s.second_moments) / pc, 1.0, 1e-9);
    EXPECT_NEAR(transmit_power(dg, s.second_moments) / pc, 1.0, 1e-9);

    auto neg = oracle::mse_gradient(in, powers_of(mse));
    for (double& g : neg) g = -g;
    EXPECT_LT(oracle::kkt_residual(powers_of(mse), neg, s.second_moments), 1e-6);
    EXPECT_LT(oracle::kkt_residual(powers_of(dg), oracle::dg_gradient(in, powers_of(dg)), s.second_moments), 1e-6);

    EXPECT_GE(achieved_dg(dg, ch, s.variances, s.squared_gaps).total,
              achieved_dg(mse, ch, s.variances, s.squared_gaps).total * (1 - 1e-12));
  }
}

TEST(WaterfillProperties, InactiveSubcarriersFailThreshold) {
  const DefaultLink link;
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto ch = rayleigh(8, 0.1, gen);
    const auto& s = link.stats;
    const auto d = waterfill_dg(ch, s.second_moments, s.variances, s.squared_gaps, 0.3);
    const double sw = std::sqrt(ch.noise_power());
    for (std::size_t n = 0; n < 8; ++n) {
      const double inside = sw * ch.gain(n) * std::sqrt(s.squared_gaps[n]) /
                                (std::sqrt(s.second_moments[n]) * std::sqrt(d.water_level) * s.variances[n]) -
                            ch.noise_power() / s.variances[n];
      if (d.precoders[n] == 0.0)
        EXPECT_LE(inside, 1e-12);
      else
        EXPECT_NEAR(d.precoders[n], std::sqrt(inside) / ch.gain(n), 1e-9 * d.precoders[n]);
    }
  }
}

TEST(WaterfillProperties, LowPowerShutdownUnderDgOnly) {
  const DefaultLink link;
  const ChannelRealization ch(std::vector<double>(8, 1.0), 0.1);
  const auto& s = link.stats;
  bool found = false;
  for (double pc = 1.0; pc > 1e-4 && !found; pc *= 0.8) {
    const auto mse = waterfill_mse(ch, s.second_moments, s.variances, pc);
    const auto dg = waterfill_dg(ch, s.second_moments, s.variances, s.squared_gaps, pc);
    for (std::size_t n = 0; n < 8; ++n) found |= dg.precoders[n] == 0.0 && mse.precoders[n] > 0.0;
  }
  EXPECT_TRUE(found);
}

TEST(WaterfillProperties, DesignsCoincideWhenGapToVarianceRatioIsUniform) {
  // With delta_n / s_n equal across n the DG slopes are a constant multiple of
  // the MSE slopes, so both water-fillings pick the same powers.
  const std::vector<double> var{0.3, 0.8, 1.5, 2.5, 4.0};
  std::vector<double> gaps, nu2;
  for (double v : var) {
    gaps.push_back(0.7 * 0.7 * v * v);
    nu2.push_back(v + 0.4);
  }
  const ChannelRealization ch({1.2, 0.5, 0.9, 1.7, 0.3}, 0.1);
  for (double pc : {0.05, 0.5, 5.0}) {
    const auto mse = waterfill_mse(ch, nu2, var, pc);
    const auto dg = waterfill_dg(ch, nu2, var, gaps, pc);
    for (std::size_t n = 0; n < var.size(); ++n) EXPECT_NEAR(mse.precoders[n], dg.precoders[n], 1e-9) << pc;
  }
}

TEST(WaterfillProperties, HighSnrConvergenceForNearUniformRatios) {
  // delta_n / s_n within +-5%: at sigma_w^2 = 1e-4 and gains >= 1 the
  // precoders agree within 10%.
  const std::vector<double> var{0.3, 0.8, 1.5, 2.5, 4.0, 0.5, 1.1, 3.0};
  const std::vector<double> jitter{1.0, 1.05, 0.95, 1.02, 0.97, 1.04, 0.96, 1.0};
  std::vector<double> gaps, nu2;
  for (std::size_t n = 0; n < var.size(); ++n) {
    gaps.push_back(std::pow(0.9 * jitter[n] * var[n], 2));
    nu2.push_back(var[n] + 0.5);
  }
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto ch = rayleigh(8, 1e-4, gen);
    std::vector<double> g(ch.gains().begin(), ch.gains().end());
    for (double& x : g) x = 1.0 + x;
    const ChannelRealization strong(g, 1e-4);
    const auto mse = waterfill_mse(strong, nu2, var, 1.0);
    const auto dg = waterfill_dg(strong, nu2, var, gaps, 1.0);
    for (std::size_t n = 0; n < 8; ++n)
      EXPECT_LT(std::abs(mse.precoders[n] - dg.precoders[n]) / mse.precoders[n], 0.10);
  }
}

TEST(AchievedDg, Limits) {
  const ChannelRealization ch({1.0, 0.5}, 0.1);
  const std::vector<double> var{1.0, 2.0}, gaps{3.0, 1.0};
  TransceiverDesign zero = silent_design(2, Criterion::dg);
  EXPECT_EQ(achieved_dg(zero, ch, var, gaps).total, 0.0);

  TransceiverDesign big = zero;
  big.precoders = {1e9, 0.0};
  EXPECT_NEAR(achieved_dg(big, ch, var, gaps).per_subcarrier[0], 3.0, 1e-12);
}

TEST(AchievedDg, IndependentOfReceiveScaling) {
  const ChannelRealization ch({1.0, 0.5}, 0.1);
  const std::vector<double> nu2{2.0, 3.0}, var{1.0, 2.0}, gaps{3.0, 1.0};
  auto d = waterfill_mse(ch, nu2, var, 1.0);
  const double before = achieved_dg(d, ch, var, gaps).total;
  for (double& a : d.scalings) a *= 7.5;
  EXPECT_EQ(achieved_dg(d, ch, var, gaps).total, before);
}

TEST(AchievedDg, MatchesMonteCarloClassSeparation) {
  // Per-dimension DG of x^ = a (h b x~ + w) measured as
  // |E[x^|0] - E[x^|1]|^2 / E|x^ - E[x^|class]|^2.
  const FeatureModel model(2, 2, {1.0, 0.5, -1.0, -0.3}, {0.8, 1.5});
  const SensingConfig sensing(0.1, 1.0);
  const auto stats = link_statistics(model, sensing, GapAggregation::worst_pair);
  const ChannelRealization ch({0.9, 1.3}, 0.2);
  const auto d = waterfill_dg(ch, stats.second_moments, stats.variances, stats.squared_gaps, 0.7);
  const auto expected = achieved_dg(d, ch, stats.variances, stats.squared_gaps);

  std::mt19937_64 gen(31);
  const int draws = 1000000;
  for (int dim = 0; dim < 2; ++dim) {
    std::complex<double> sum[2] = {0.0, 0.0};
    double sq[2] = {0, 0};
    for (int label = 0; label < 2; ++label)
      for (int i = 0; i < draws / 2; ++i) {
        const auto x = sample_features(model, sensing, label, gen);
        const auto rx = transmit_and_receive(x, d, ch, gen);
        sum[label] += rx[dim];
        sq[label] += std::norm(rx[dim]);
      }
    const double n = draws / 2;
    const auto m0 = sum[0] / n, m1 = sum[1] / n;
    const double v = 0.5 * ((sq[0] / n - std::norm(m0)) + (sq[1] / n - std::norm(m1)));
    EXPECT_NEAR(std::norm(m0 - m1) / v, expected.per_subcarrier[dim], 0.02 * expected.per_subcarrier[dim]);
  }
}
