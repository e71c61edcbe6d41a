#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "ergosim/churn.hpp"

using namespace ergosim;

namespace {

ChurnTrace parse(const std::string& text) {
  std::istringstream in(text);
  return parse_trace_csv(in);
}

TraceSpec exp_spec(double mean_h, double rate, std::size_t n, Seconds duration, std::uint64_t seed = 1) {
  TraceSpec s;
  s.source = ExponentialSource{mean_h, rate};
  s.initial_population = n;
  s.duration = duration;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Ingest, SameSecondJitter) {
  ChurnTrace tr = parse("0,join,a\n0,join,b\n");
  ASSERT_EQ(tr.events.size(), 2u);
  EXPECT_DOUBLE_EQ(tr.events[0].time, 0.0);
  EXPECT_DOUBLE_EQ(tr.events[1].time, 0.000001);
}

TEST(Ingest, UnknownDepartureNamesId) {
  try {
    parse("5,depart,x\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find(" x"), std::string::npos);
  }
}

TEST(Ingest, ThreeLineFile) {
  ChurnTrace tr = parse("time_s,event,id\n1,join,alice\n2.5,join,bob\n4,depart,alice\n");
  ASSERT_EQ(tr.events.size(), 3u);
  EXPECT_TRUE(tr.events[0].is_join());
  EXPECT_EQ(tr.events[0].time, 1.0);
  EXPECT_EQ(trace_id_name(tr, tr.events[0].uid()), "alice");
  EXPECT_EQ(tr.events[1].time, 2.5);
  EXPECT_EQ(trace_id_name(tr, tr.events[1].uid()), "bob");
  EXPECT_FALSE(tr.events[2].is_join());
  EXPECT_EQ(tr.events[2].uid(), tr.events[0].uid());
  EXPECT_EQ(tr.events[2].time, 4.0);
}

TEST(Ingest, Errors) {
  auto code = [](const std::string& text) {
    try {
      parse(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::IoError;
  };
  EXPECT_EQ(code("3,join,a\n2,join,b\n"), ErrorCode::OrderError);
  EXPECT_EQ(code("1,join,a\n2,join,a\n"), ErrorCode::ParseError);
  EXPECT_EQ(code("1,arrive,a\n"), ErrorCode::ParseError);
  EXPECT_EQ(code("1,join\n"), ErrorCode::ParseError);
  EXPECT_EQ(code("1,join,a\nx,join,b\n"), ErrorCode::ParseError);
}

TEST(Ingest, ErrorCarriesLineNumber) {
  try {
    parse("time_s,event,id\n1,join,a\n2,bogus,b\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find(":3"), std::string::npos) << e.what();
  }
}

TEST(Ingest, LimitAndPromotion) {
  ChurnTrace tr = parse("0,join,a\n0,join,b\n0,join,c\n0,depart,c\n5,join,d\n6,depart,a\n");
  EXPECT_EQ(truncate_events(tr, 2).events.size(), 2u);
  std::istringstream in("0,join,a\n1,join,b\n2,join,c\n");
  EXPECT_EQ(parse_trace_csv(in, 2).events.size(), 2u);
  ChurnTrace p = promote_initial(tr, 1.0);
  ASSERT_EQ(p.initial_ids.size(), 2u);  // a and b; c left within the cutoff
  ASSERT_EQ(p.events.size(), 2u);
  EXPECT_NO_THROW(validate_trace(p, 0));
}

TEST(Ingest, ExportRoundTrip) {
  ChurnTrace tr = make_trace(exp_spec(0.5, 0.5, 50, 2000, 9), {4, 1.0 / 12, 1.0});
  std::stringstream buf;
  export_trace_csv(tr, buf);
  ChurnTrace back = promote_initial(parse_trace_csv(buf), 1e-3);
  ASSERT_EQ(back.initial_ids.size(), tr.initial_ids.size());
  ASSERT_EQ(back.events.size(), tr.events.size());
  for (std::size_t i = 0; i < tr.events.size(); ++i) {
    EXPECT_NEAR(back.events[i].time, tr.events[i].time, 2e-6);
    EXPECT_EQ(back.events[i].is_join(), tr.events[i].is_join());
  }
}

TEST(Weibull, ShapeOneIsExponential) {
  TraceSpec s;
  s.source = WeibullSource{1.0, 2.0};
  SessionSampler sampler(s);
  Rng rng(5);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += sampler.draw(rng);
  EXPECT_NEAR(sum / 100000, 7200.0, 0.02 * 7200.0);
}

TEST(Weibull, BitTorrentMean) {
  TraceSpec s;
  s.source = WeibullSource{0.59, 41.0};
  SessionSampler sampler(s);
  Rng rng(6);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += sampler.draw(rng);
  double expect = 41.0 * 3600.0 * std::tgamma(1.0 + 1.0 / 0.59);
  EXPECT_NEAR(sum / 100000, expect, 0.03 * expect);
  EXPECT_DOUBLE_EQ(weibull_mean(0.59, 41.0 * 3600.0), expect);
}

TEST(Weibull, SameSeedSameTrace) {
  TraceSpec s;
  s.source = WeibullSource{0.52, 9.8};
  s.initial_population = 500;
  s.duration = 20000;
  s.seed = 77;
  ChurnTrace a = make_trace(s), b = make_trace(s);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    ASSERT_EQ(a.events[i].time, b.events[i].time);
    ASSERT_EQ(a.events[i].uid(), b.events[i].uid());
  }
  s.seed = 78;
  EXPECT_NE(make_trace(s).events.front().time, a.events.front().time);
}

TEST(Weibull, RateKeepsPopulationNearInitial) {
  TraceSpec s;
  s.source = WeibullSource{0.52, 9.8};
  s.initial_population = 2000;
  EXPECT_DOUBLE_EQ(arrival_rate(s), 2000.0 / mean_session_seconds(s));
}

TEST(Weibull, InvalidParameters) {
  TraceSpec s;
  s.source = WeibullSource{0.0, 9.8};
  s.duration = 10;
  Rng rng(1);
  EXPECT_THROW(generate_weibull_trace(s, rng), Error);
  s.source = WeibullSource{1.0, -1.0};
  EXPECT_THROW(generate_weibull_trace(s, rng), Error);
}

TEST(Exponential, JoinCountWithinThreeSigma) {
  ChurnTrace tr = make_trace(exp_spec(2.3, 1.0, 10000, 10000, 3));
  std::size_t joins = 0;
  for (const auto& e : tr.events) joins += e.is_join();
  EXPECT_LE(std::abs(static_cast<double>(joins) - 10000.0), 300.0);
}

TEST(Exponential, SessionMean) {
  SessionSampler sampler(exp_spec(2.3, 1.0, 10, 0));
  Rng rng(8);
  double sum = 0;
  for (int i = 0; i < 100000; ++i) sum += sampler.draw(rng);
  EXPECT_NEAR(sum / 100000, 2.3 * 3600, 0.02 * 2.3 * 3600);
}

TEST(Exponential, ZeroHorizon) {
  ChurnTrace tr = make_trace(exp_spec(2.3, 1.0, 100, 0));
  EXPECT_TRUE(tr.events.empty());
  EXPECT_EQ(tr.initial_ids.size(), 100u);
}

TEST(Exponential, InvalidParameters) {
  Rng rng(1);
  EXPECT_THROW(generate_exponential_trace(exp_spec(0, 1, 10, 10), rng), Error);
  EXPECT_THROW(generate_exponential_trace(exp_spec(1, 0, 10, 10), rng), Error);
  EXPECT_THROW(generate_exponential_trace(exp_spec(1, 1, 2, 10), rng), Error);
}

TEST(Constraints, FloorHoldsAndSuppressionsAreCounted) {
  // short sessions and few arrivals push the population to the floor; the
  // departure cap is lifted so only the floor binds
  ChurnConstraints cons{6, 1.0, 1.0};
  ChurnTrace tr = make_trace(exp_spec(0.05, 0.002, 20, 50000, 4), cons);
  EXPECT_NO_THROW(validate_trace(tr, 6));
  EXPECT_GT(tr.suppressed_departures, 0u);
}

TEST(Constraints, PerRoundDeparturesCapped) {
  ChurnConstraints cons{4, 1.0 / 12, 1.0};
  ChurnTrace tr = make_trace(exp_spec(0.005, 2.0, 24, 5000, 12), cons);
  ASSERT_GT(tr.staggered_departures, 0u);
  std::size_t pop = tr.initial_ids.size();
  std::map<std::int64_t, std::size_t> per_round;
  for (const auto& e : tr.events) {
    if (e.is_join()) {
      ++pop;
      continue;
    }
    auto r = static_cast<std::int64_t>(std::floor(e.time));
    std::size_t k = ++per_round[r];
    ASSERT_LE(static_cast<double>(k), pop / 12.0 + 1e-9) << "round " << r;
    --pop;
  }
}

TEST(Constraints, PureFunctionOfSpecAndSeed) {
  TraceSpec s = exp_spec(1.0, 0.5, 300, 4000, 21);
  ChurnTrace a = make_trace(s), b = make_trace(s);
  std::stringstream sa, sb;
  export_trace_csv(a, sa);
  export_trace_csv(b, sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Constraints, TimesStrictlyIncrease) {
  TraceSpec s;
  s.source = WeibullSource{0.52, 0.2};
  s.initial_population = 1000;
  s.duration = 20000;
  s.seed = 5;
  ChurnTrace tr = make_trace(s);
  for (std::size_t i = 1; i < tr.events.size(); ++i) ASSERT_LT(tr.events[i - 1].time, tr.events[i].time);
  EXPECT_NO_THROW(validate_trace(tr, 4));
}

TEST(Export, SecondResolution) {
  ChurnTrace tr = parse("0.4,join,a\n1.7,join,b\n2.2,depart,a\n");
  std::stringstream out;
  export_trace_csv(tr, out, 1.0);
  EXPECT_EQ(out.str(), "time_s,event,id\n0,join,a\n1,join,b\n2,depart,a\n");
}
