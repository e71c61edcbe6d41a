#include <gtest/gtest.h>

#include <map>
#include <set>

#include "ergosim/adversary.hpp"

using namespace ergosim;

namespace {

AdversaryConfig steady(double T) {
  AdversaryConfig c;
  c.spend_rate_T = T;
  return c;
}

}  // namespace

TEST(AccrueAndAct, ZeroRateNeverJoins) {
  AdversaryState st(0.0, 0.0);
  auto out = accrue_and_act(st, steady(0), 1e6, [] { return Units{1}; }, [](Units) { return true; });
  EXPECT_TRUE(out.empty());
  EXPECT_EQ(st.spent(), 0);
}

TEST(AccrueAndAct, RisingCostsExhaustBudget) {
  AdversaryState st(10.0, 0.0);
  Units next = 1;
  auto out = accrue_and_act(st, steady(10), 1.0, [&] { return next; }, [&](Units) {
    ++next;
    return true;
  });
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(st.spent(), 10);
  EXPECT_DOUBLE_EQ(st.budget(1.0), 0.0);
}

TEST(AccrueAndAct, RefusedAttemptsStillSpend) {
  AdversaryState st(5.0, 0.0);
  auto out = accrue_and_act(st, steady(5), 1.0, [] { return Units{1}; }, [](Units) { return false; });
  ASSERT_EQ(out.size(), 5u);
  for (const auto& s : out) EXPECT_FALSE(s.admitted);
  EXPECT_EQ(st.spent(), 5);
}

TEST(AccrueAndAct, BurstWaitsForPeriod) {
  AdversaryConfig c = steady(1.0);
  c.strategy = Strategy::BurstJoin;
  c.burst_period_s = 10.0;
  AdversaryState st(1.0, 0.0);
  auto one = [] { return Units{1}; };
  auto yes = [](Units) { return true; };
  EXPECT_TRUE(accrue_and_act(st, c, 0.0, one, yes).empty());  // burst at 0 with no budget yet
  EXPECT_TRUE(accrue_and_act(st, c, 5.0, one, yes).empty());
  EXPECT_EQ(accrue_and_act(st, c, 10.0, one, yes).size(), 10u);
  EXPECT_TRUE(accrue_and_act(st, c, 15.0, one, yes).empty());
  EXPECT_EQ(accrue_and_act(st, c, 20.0, one, yes).size(), 10u);
}

TEST(AccrueAndAct, NoneStrategyIsIdle) {
  AdversaryConfig c = steady(100);
  c.strategy = Strategy::None;
  AdversaryState st(100, 0);
  EXPECT_TRUE(accrue_and_act(st, c, 10.0, [] { return Units{1}; }, [](Units) { return true; }).empty());
}

TEST(Budget, ConservedAcrossSpending) {
  Rng rng(9);
  AdversaryState st(3.5, 2.0);
  Seconds t = 2.0;
  Units total = 0;
  for (int i = 0; i < 1000; ++i) {
    t += std::uniform_real_distribution<double>(0, 2)(rng);
    Units c = 1 + static_cast<Units>(rng() % 5);
    auto out = accrue_and_act(st, steady(3.5), t, [&] { return c; }, [](Units) { return true; });
    for (const auto& s : out) total += s.cost;
    ASSERT_GE(st.budget(t), -1e-9);
    ASSERT_LT(st.budget(t), static_cast<double>(c));
  }
  EXPECT_EQ(total, st.spent());
  EXPECT_NEAR(st.budget(t) + static_cast<double>(st.spent()), 3.5 * (t - 2.0), 1e-6);
}

TEST(Budget, TimeAffording) {
  AdversaryState st(2.0, 0.0);
  Seconds t = st.time_affording(5.0, 0.0);
  EXPECT_GE(st.budget(t), 5.0);
  EXPECT_LT(st.budget(std::nextafter(t, 0.0)), 5.0);
  EXPECT_EQ(st.time_affording(1.0, 10.0), 10.0);
  EXPECT_EQ(AdversaryState(0.0, 0.0).time_affording(1.0, 0.0), kNever);
}

TEST(PurgeResponse, Cases) {
  AdversaryState st(100.0, 0.0);
  AdversaryConfig c;
  EXPECT_EQ(purge_response(st, c, 180, 50, 10.0), 0u);
  c.respond_to_purges = true;
  EXPECT_EQ(purge_response(st, c, 180, 50, 10.0), 10u);
  EXPECT_EQ(st.spent(), 10);
  EXPECT_EQ(purge_response(st, c, 180, 0, 10.0), 0u);
  EXPECT_EQ(purge_response(st, c, 180, 3, 10.0), 3u);
  AdversaryState poor(1.0, 0.0);
  EXPECT_EQ(purge_response(poor, c, 180, 50, 2.5), 2u);
}

TEST(KappaShare, ExactAtMultiples) {
  for (std::size_t n = 0; n < 10000; ++n) ASSERT_EQ(kappa_share(1.0 / 18.0, n), n / 18) << n;
}

TEST(Config, Validation) {
  AdversaryConfig c;
  EXPECT_NO_THROW(c.validate());
  c.spend_rate_T = -1;
  EXPECT_THROW(c.validate(), Error);
  c = AdversaryConfig{};
  c.strategy = Strategy::BurstJoin;
  c.burst_period_s = 0;
  EXPECT_THROW(c.validate(), Error);
  c = AdversaryConfig{};
  c.initial_bad_fraction = 1.0;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Hypergeometric, EdgeCases) {
  Rng rng(1);
  EXPECT_EQ(hypergeometric(10, 0, 5, rng), 0u);
  EXPECT_EQ(hypergeometric(10, 10, 5, rng), 5u);
  EXPECT_EQ(hypergeometric(10, 4, 10, rng), 4u);
  EXPECT_EQ(hypergeometric(10, 4, 0, rng), 0u);
  EXPECT_EQ(hypergeometric(0, 0, 0, rng), 0u);
}

TEST(Hypergeometric, MeanAndVarianceInEveryBranch) {
  // (total, marked, draws): plain, swapped, complemented, swapped and complemented
  struct Case {
    std::size_t N, K, n;
  };
  for (Case c : {Case{1000, 50, 100}, Case{1000, 300, 40}, Case{1000, 30, 900}, Case{1000, 950, 800}}) {
    Rng rng(c.N + c.K + c.n);
    const int reps = 20000;
    double sum = 0, sq = 0;
    for (int i = 0; i < reps; ++i) {
      double x = static_cast<double>(hypergeometric(c.N, c.K, c.n, rng));
      ASSERT_LE(x, static_cast<double>(std::min(c.K, c.n)));
      sum += x;
      sq += x * x;
    }
    double N = c.N, K = c.K, n = c.n;
    double mean = n * K / N;
    double var = n * (K / N) * (1 - K / N) * (N - n) / (N - 1);
    double m = sum / reps;
    EXPECT_NEAR(m, mean, 5 * std::sqrt(var / reps)) << c.K << " " << c.n;
    EXPECT_NEAR(sq / reps - m * m, var, 0.05 * var) << c.K << " " << c.n;
  }
}

TEST(SampleWithoutReplacement, DistinctMembersUniform) {
  IdSet s;
  for (Uid u = 0; u < 20; ++u) s.insert(u * 3);
  Rng rng(4);
  std::map<Uid, int> freq;
  const int reps = 20000;
  for (int i = 0; i < reps; ++i) {
    auto v = sample_without_replacement(s, 5, rng);
    ASSERT_EQ(v.size(), 5u);
    std::set<Uid> uniq(v.begin(), v.end());
    ASSERT_EQ(uniq.size(), 5u);
    for (Uid u : v) {
      ASSERT_TRUE(s.contains(u));
      ++freq[u];
    }
  }
  double p = 0.25, sigma = std::sqrt(reps * p * (1 - p));
  for (const auto& [u, f] : freq) EXPECT_LE(std::abs(f - reps * p), 5 * sigma) << u;
  EXPECT_EQ(sample_without_replacement(s, 50, rng).size(), 20u);
}
