#pragma once

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ergosim/simulation.hpp"
#include "json.hpp"

namespace ergosim {

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

using json = nlohmann::json;

// ---- trace presets ----

struct TraceConfig {
  std::string name = "gnutella";
  TraceSpec spec;
  // exported at one-second resolution and re-read through the file parser
  bool via_file_format = false;
  // extra trace time available for the warm-up phase; negative picks a default
  Seconds warmup_max_s = -1;
};

inline TraceConfig trace_preset(const std::string& name) {
  TraceConfig c;
  c.name = name;
  c.spec.initial_population = 10000;
  if (name == "gnutella") {
    c.spec.source = ExponentialSource{2.3, 1.0};
  } else if (name == "bittorrent") {
    c.spec.source = WeibullSource{0.59, 41.0};
  } else if (name == "ethereum") {
    c.spec.source = WeibullSource{0.52, 9.8};
  } else if (name == "bitcoin-standin") {
    // synthetic substitute for the Bitcoin measurement file: second-resolution
    // CSV through the same ingestion path
    c.spec.source = ExponentialSource{6.0, 9212.0 / (6.0 * 3600.0)};
    c.spec.initial_population = 9212;
    c.via_file_format = true;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown trace preset '" + name + "'");
  }
  return c;
}

inline Seconds default_warmup_allowance(const TraceConfig& tc) {
  if (tc.warmup_max_s >= 0) return tc.warmup_max_s;
  if (std::holds_alternative<FileSource>(tc.spec.source)) return 0;
  return 4.0 * mean_session_seconds(tc.spec);
}

// Materializes a trace covering `duration` seconds.
inline ChurnTrace build_trace(const TraceConfig& tc, std::uint64_t seed, Seconds duration,
                              const ChurnConstraints& cons) {
  TraceSpec spec = tc.spec;
  spec.seed = seed;
  if (auto* f = std::get_if<FileSource>(&spec.source)) {
    ChurnTrace tr = promote_initial(ingest_trace_file(f->path), f->initial_cutoff_s);
    validate_trace(tr, cons.n0);
    return tr;
  }
  spec.duration = duration;
  ChurnTrace tr = make_trace(spec, cons);
  if (tc.via_file_format) {
    std::stringstream buf;
    export_trace_csv(tr, buf, 1.0);
    ChurnTrace re = promote_initial(parse_trace_csv(buf, std::nullopt, tc.name), 1.0);
    re.suppressed_departures = tr.suppressed_departures;
    re.staggered_departures = tr.staggered_departures;
    tr = std::move(re);
  }
  return tr;
}

// ---- configuration ----

struct EstimateConfig {
  std::vector<double> bad_fractions{1.0 / 1500, 1.0 / 375, 1.0 / 94, 1.0 / 24, 1.0 / 6};
  std::vector<double> T_values{0.0, 1e4};
  std::size_t events = 100000;
  std::size_t initial_population = 10000;
};

struct ExperimentConfig {
  TraceConfig trace = trace_preset("gnutella");
  std::vector<DefenseSpec> defenses{DefenseSpec::parse("ergo")};
  AdversaryConfig adversary;
  SimConfig sim;
  std::vector<double> sweep_T;
  std::size_t repeats = 3;
  bool committee = false;
  double committee_C = 32.0;
  Warmup warmup = Warmup::FirstInterval;
  Seconds sample_period = 100.0;
  EstimateConfig estimate;
  std::size_t threads = 0;
  json source = json::object();  // the parsed config file, echoed in run_meta

  ExperimentConfig() {
    for (int k = 0; k <= 20; ++k) sweep_T.push_back(std::ldexp(1.0, k));
  }

  void validate() const {
    sim.validate();
    adversary.validate();
    if (sweep_T.empty()) throw Error(ErrorCode::ConfigError, "sweep_T must be nonempty");
    if (repeats == 0) throw Error(ErrorCode::ConfigError, "repeats must be positive");
    if (defenses.empty()) throw Error(ErrorCode::ConfigError, "no defense selected");
    for (double t : sweep_T)
      if (!(t >= 0)) throw Error(ErrorCode::ConfigError, "sweep_T values must be non-negative");
    validate_spec(trace.spec, sim.n0);
  }

  std::uint64_t repeat_seed(std::size_t i) const { return sim.rng_seed + i; }

  RunOptions run_options(const DefenseSpec& d) const {
    RunOptions o;
    o.sim = sim;
    o.defense = d;
    o.adversary = adversary;
    o.adversary.kappa = sim.kappa;
    o.committee = committee;
    o.committee_C = committee_C;
    o.warmup = warmup;
    o.sample_period = sample_period;
    return o;
  }

  ChurnConstraints constraints() const { return {sim.n0, sim.epsilon, sim.round_len}; }

  Seconds trace_duration() const {
    return sim.horizon + (warmup == Warmup::FirstInterval ? default_warmup_allowance(trace) : 0.0);
  }
};

namespace detail {

// accepts a number or a "a/b" string
inline double fraction_value(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    auto slash = s.find('/');
    double a = 0, b = 1;
    if (slash == std::string::npos ? parse_double(s, a)
                                   : parse_double(s.substr(0, slash), a) && parse_double(s.substr(slash + 1), b))
      if (b != 0) return a / b;
  }
  throw Error(ErrorCode::ConfigError, "expected a number or fraction, got " + v.dump());
}

inline std::vector<double> number_list(const json& v) {
  std::vector<double> out;
  if (!v.is_array()) throw Error(ErrorCode::ConfigError, "expected a list, got " + v.dump());
  for (const auto& x : v) out.push_back(fraction_value(x));
  return out;
}

inline TraceConfig parse_trace_config(const json& j) {
  TraceConfig tc;
  if (j.is_string()) return trace_preset(j.get<std::string>());
  if (j.contains("preset")) {
    tc = trace_preset(j.at("preset").get<std::string>());
  } else {
    std::string src = j.value("source", std::string("exponential"));
    tc.name = j.value("name", src);
    if (src == "weibull") {
      tc.spec.source = WeibullSource{j.at("shape").get<double>(), j.at("scale_hours").get<double>()};
    } else if (src == "exponential") {
      tc.spec.source =
          ExponentialSource{j.at("mean_hours").get<double>(), j.value("arrival_rate_per_s", 1.0)};
    } else if (src == "file") {
      tc.spec.source = FileSource{j.at("path").get<std::string>(), j.value("initial_cutoff_s", 1.0)};
    } else {
      throw Error(ErrorCode::ConfigError, "unknown trace source '" + src + "'");
    }
  }
  tc.spec.initial_population = j.value("initial_population", tc.spec.initial_population);
  tc.warmup_max_s = j.value("warmup_max_s", tc.warmup_max_s);
  return tc;
}

}  // namespace detail

inline ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  c.source = j;
  try {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
      throw Error(ErrorCode::ConfigError, "unsupported schema_version");
    if (j.contains("trace")) c.trace = detail::parse_trace_config(j.at("trace"));
    if (j.contains("defenses")) {
      c.defenses.clear();
      for (const auto& d : j.at("defenses")) c.defenses.push_back(DefenseSpec::parse(d.get<std::string>()));
    } else if (j.contains("defense")) {
      c.defenses = {DefenseSpec::parse(j.at("defense").get<std::string>())};
    }
    if (j.contains("sim")) {
      const json& s = j.at("sim");
      c.sim.n0 = s.value("n0", c.sim.n0);
      if (s.contains("kappa")) c.sim.kappa = detail::fraction_value(s.at("kappa"));
      c.sim.round_len = s.value("round_len", c.sim.round_len);
      if (s.contains("epsilon")) c.sim.epsilon = detail::fraction_value(s.at("epsilon"));
      c.sim.rng_seed = s.value("seed", c.sim.rng_seed);
      c.sim.horizon = s.value("horizon_s", c.sim.horizon);
    }
    if (j.contains("adversary")) {
      const json& a = j.at("adversary");
      std::string st = a.value("strategy", std::string("steady"));
      if (st == "steady")
        c.adversary.strategy = Strategy::SteadyJoin;
      else if (st == "burst")
        c.adversary.strategy = Strategy::BurstJoin;
      else if (st == "none")
        c.adversary.strategy = Strategy::None;
      else
        throw Error(ErrorCode::ConfigError, "unknown strategy '" + st + "'");
      c.adversary.burst_period_s = a.value("burst_period_s", c.adversary.burst_period_s);
      c.adversary.respond_to_purges = a.value("respond_to_purges", false);
      if (a.contains("initial_bad_fraction"))
        c.adversary.initial_bad_fraction = detail::fraction_value(a.at("initial_bad_fraction"));
    }
    if (j.contains("sweep_T")) c.sweep_T = detail::number_list(j.at("sweep_T"));
    c.repeats = j.value("repeats", c.repeats);
    if (j.contains("committee")) {
      c.committee = j.at("committee").value("enabled", true);
      c.committee_C = j.at("committee").value("C", c.committee_C);
    }
    if (j.contains("warmup")) {
      std::string w = j.at("warmup").get<std::string>();
      if (w == "none")
        c.warmup = Warmup::None;
      else if (w == "first_interval")
        c.warmup = Warmup::FirstInterval;
      else
        throw Error(ErrorCode::ConfigError, "unknown warmup '" + w + "'");
    }
    c.sample_period = j.value("sample_period_s", c.sample_period);
    if (j.contains("estimate")) {
      const json& e = j.at("estimate");
      if (e.contains("bad_fractions")) c.estimate.bad_fractions = detail::number_list(e.at("bad_fractions"));
      if (e.contains("T")) c.estimate.T_values = detail::number_list(e.at("T"));
      c.estimate.events = e.value("events", c.estimate.events);
      c.estimate.initial_population = e.value("initial_population", c.estimate.initial_population);
    }
    c.threads = j.value("threads", c.threads);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  c.adversary.kappa = c.sim.kappa;
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path + ": " + e.what());
  }
  return parse_config(j);
}

// ---- sweep ----

struct SweepRow {
  std::string defense;
  std::string trace;
  double T = 0;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  RunResult run;  // bulky vectors dropped for sweep rows
};

namespace detail {

// runs fn(i) for i in [0, n) on up to `threads` workers
inline void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(m);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

inline void strip(RunResult& r) {
  r.intervals.clear();
  r.estimates.clear();
  r.iterations.clear();
  r.committee_audits.clear();
  r.good_events.clear();
  r.initial_good.clear();
  r.ledger.samples.clear();
}

}  // namespace detail

inline RunResult remp_result(const DefenseSpec& d, const SimConfig& sim, double T, std::uint64_t seed) {
  RunResult r;
  r.defense = d.name;
  r.T = T;
  r.seed = seed;
  r.valid = T <= d.t_max;
  r.measure_end = sim.horizon;
  r.rates.good_spend_rate_A = remp_good_spend_rate(sim.kappa, d.t_max);
  r.rates.good_periodic_rate = r.rates.good_spend_rate_A;
  r.rates.adversary_spend_rate_T = T;
  return r;
}

// One row per (defense, T, repeat), ordered that way. `progress` may be null.
inline std::vector<SweepRow> run_sweep(const ExperimentConfig& cfg,
                                       const std::function<void(const SweepRow&)>& progress = nullptr) {
  cfg.validate();
  std::vector<ChurnTrace> traces(cfg.repeats);
  bool need_traces = std::any_of(cfg.defenses.begin(), cfg.defenses.end(),
                                 [](const DefenseSpec& d) { return d.kind != DefenseKind::Remp; });
  if (need_traces)
    detail::parallel_for(cfg.repeats, cfg.threads, [&](std::size_t i) {
      traces[i] = build_trace(cfg.trace, cfg.repeat_seed(i), cfg.trace_duration(), cfg.constraints());
    });
  std::vector<SweepRow> rows;
  for (const auto& d : cfg.defenses)
    for (double T : cfg.sweep_T)
      for (std::size_t i = 0; i < cfg.repeats; ++i) rows.push_back(SweepRow{d.name, cfg.trace.name, T, i, cfg.repeat_seed(i), {}});
  // longest runs first keeps workers busy
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rows[a].T > rows[b].T; });
  std::mutex m;
  detail::parallel_for(rows.size(), cfg.threads, [&](std::size_t k) {
    SweepRow& row = rows[order[k]];
    const DefenseSpec& d = *std::find_if(cfg.defenses.begin(), cfg.defenses.end(),
                                         [&](const DefenseSpec& x) { return x.name == row.defense; });
    if (d.kind == DefenseKind::Remp) {
      row.run = remp_result(d, cfg.sim, row.T, row.seed);
    } else {
      row.run = run_simulation(cfg.run_options(d), traces[row.repeat], row.T, row.seed);
      detail::strip(row.run);
    }
    if (progress) {
      std::lock_guard<std::mutex> g(m);
      progress(row);
    }
  });
  return rows;
}

struct MedianRow {
  std::string defense;
  double T = 0;
  double median_A = 0;
  double median_T_observed = 0;
  double max_bad_fraction = 0;
  bool all_valid = true;
  bool all_invariants_ok = true;
};

inline double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline std::vector<MedianRow> sweep_medians(const std::vector<SweepRow>& rows) {
  std::vector<MedianRow> out;
  std::map<std::pair<std::string, double>, std::size_t> index;
  std::vector<std::vector<double>> as, ts;
  for (const auto& r : rows) {
    auto key = std::make_pair(r.defense, r.T);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back(MedianRow{r.defense, r.T});
      as.emplace_back();
      ts.emplace_back();
    }
    MedianRow& m = out[it->second];
    as[it->second].push_back(r.run.rates.good_spend_rate_A);
    ts[it->second].push_back(r.run.rates.adversary_spend_rate_T);
    m.max_bad_fraction = std::max(m.max_bad_fraction, r.run.max_bad_fraction);
    m.all_valid = m.all_valid && r.run.valid;
    m.all_invariants_ok = m.all_invariants_ok && r.run.invariant_ok();
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].median_A = median(as[i]);
    out[i].median_T_observed = median(ts[i]);
  }
  return out;
}

// ---- estimate experiment ----

struct EstimateRun {
  std::string trace;
  double T = 0;
  double bad_fraction = 0;
  std::uint64_t seed = 0;
  std::vector<EpochRecord> epochs;
  double alpha = 1;
  double beta = 1;
  std::size_t zero_rate_pairs = 0;
  std::vector<RatioSample> series;
  double min_ratio = 0;  // over samples after the first interval
  double max_ratio = 0;
  std::size_t samples_checked = 0;
  std::size_t envelope_violations = 0;
  double max_bad_fraction = 0;
  std::size_t events = 0;
  std::vector<IntervalRecord> intervals;
};

// trace of `events` events after the initial population, generated long enough
inline ChurnTrace build_event_trace(const TraceConfig& tc, std::size_t initial, std::size_t events,
                                    std::uint64_t seed, const ChurnConstraints& cons) {
  TraceConfig c = tc;
  c.spec.initial_population = initial;
  if (std::holds_alternative<FileSource>(c.spec.source))
    return truncate_events(build_trace(c, seed, 0, cons), events);
  double rate = arrival_rate(c.spec);
  Seconds d = 0.75 * static_cast<double>(events) / rate;
  for (int attempt = 0; attempt < 12; ++attempt, d *= 1.6) {
    ChurnTrace tr = build_trace(c, seed, d, cons);
    if (tr.events.size() >= events) return truncate_events(std::move(tr), events);
  }
  throw Error(ErrorCode::TraceError, "could not generate enough events");
}

inline EstimateRun analyze_estimate_run(const RunResult& r, double T, double f, const std::string& trace) {
  EstimateRun er;
  er.trace = trace;
  er.T = T;
  er.bad_fraction = f;
  er.seed = r.seed;
  er.events = r.good_events.size();
  er.max_bad_fraction = r.max_bad_fraction;
  er.intervals = r.intervals;
  er.epochs = detect_epochs(r.good_events, r.initial_good, 0.0, r.measure_end);
  try {
    auto a = estimate_alpha(er.epochs);
    er.alpha = a.alpha;
    er.zero_rate_pairs = a.zero_rate_pairs;
    er.beta = estimate_beta(er.epochs, r.good_events).beta;
  } catch (const Error&) {
    er.alpha = er.beta = 1;
  }
  er.series = attach_rho(r.estimates, er.epochs);
  er.min_ratio = kNever;
  er.max_ratio = 0;
  for (const auto& s : er.series) {
    if (s.interval == 0) continue;
    ++er.samples_checked;
    er.min_ratio = std::min(er.min_ratio, s.ratio);
    er.max_ratio = std::max(er.max_ratio, s.ratio);
  }
  if (er.samples_checked == 0) er.min_ratio = 0;
  er.envelope_violations = theorem2_envelope_check(er.series, er.alpha, er.beta);
  return er;
}

// GoodJEst under ERGO with a standing bad population of fraction f that always
// passes purges, plus bad joins bought at spend rate T and evicted by purges.
inline EstimateRun run_estimate_single(const ExperimentConfig& cfg, const ChurnTrace& tr, double T, double f,
                                       std::uint64_t seed) {
  RunOptions o = cfg.run_options(DefenseSpec::parse("ergo"));
  o.warmup = Warmup::None;
  o.record_good_events = true;
  o.adversary.initial_bad_fraction = f;
  o.adversary.initial_bad_permanent = true;
  o.adversary.respond_to_purges = false;
  o.adversary.strategy = Strategy::SteadyJoin;
  o.sim.horizon = tr.end_time();
  RunResult r = run_simulation(o, tr, T, seed);
  return analyze_estimate_run(r, T, f, cfg.trace.name);
}

inline std::vector<EstimateRun> run_estimate(const ExperimentConfig& cfg) {
  cfg.sim.validate();
  std::uint64_t seed = cfg.sim.rng_seed;
  ChurnTrace tr = build_event_trace(cfg.trace, cfg.estimate.initial_population, cfg.estimate.events, seed,
                                    cfg.constraints());
  std::vector<std::pair<double, double>> grid;
  for (double T : cfg.estimate.T_values)
    for (double f : cfg.estimate.bad_fractions) grid.emplace_back(T, f);
  std::vector<EstimateRun> out(grid.size());
  detail::parallel_for(grid.size(), cfg.threads, [&](std::size_t i) {
    out[i] = run_estimate_single(cfg, tr, grid[i].first, grid[i].second, seed);
  });
  return out;
}

// ---- output ----

namespace csv {

inline std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char b[40];
  std::snprintf(b, sizeof b, "%.10g", v);
  return b;
}

inline std::string time(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.6f", v);
  return b;
}

inline const char* flag(bool b) { return b ? "true" : "false"; }

}  // namespace csv

inline const char* kSweepHeader =
    "defense,trace,T,repeat,seed,good_spend_rate,adversary_spend_rate,good_entrance_rate,good_purge_rate,"
    "good_periodic_rate,max_bad_fraction,mean_entrance_cost,purges,good_joins,good_departs,bad_joins,"
    "refused_bad_attempts,false_refusals,suppressed_departures,staggered_departures,bad_fraction_cutoff_s,"
    "valid,invariant_ok,violations,subinterval_checked,subinterval_violations,overlap_max,overlap_violations,"
    "measure_start_s,warmup_complete";

inline void write_sweep_row(std::ostream& o, const SweepRow& row) {
  const RunResult& r = row.run;
  o << row.defense << ',' << row.trace << ',' << csv::num(row.T) << ',' << row.repeat << ',' << row.seed << ','
    << csv::num(r.rates.good_spend_rate_A) << ',' << csv::num(r.rates.adversary_spend_rate_T) << ','
    << csv::num(r.rates.good_entrance_rate) << ',' << csv::num(r.rates.good_purge_rate) << ','
    << csv::num(r.rates.good_periodic_rate) << ',' << csv::num(r.max_bad_fraction) << ','
    << csv::num(r.mean_entrance_cost) << ',' << r.purges << ',' << r.good_joins << ',' << r.good_departs << ','
    << r.bad_joins << ',' << r.refused_bad_attempts << ',' << r.false_refusals << ',' << r.suppressed_departures
    << ',' << r.staggered_departures << ','
    << (r.bad_fraction_cutoff ? csv::time(*r.bad_fraction_cutoff - r.measure_start) : std::string()) << ','
    << csv::flag(r.valid) << ',' << csv::flag(r.invariant_ok()) << ',' << r.violation_count << ','
    << r.subinterval_checked << ',' << r.subinterval_violations << ',' << r.overlap_max << ',' << r.overlap_violations
    << ',' << csv::time(r.measure_start) << ',' << csv::flag(r.warmup_complete) << '\n';
}

inline void write_sweep_csv(std::ostream& o, const std::vector<SweepRow>& rows) {
  o << kSweepHeader << '\n';
  for (const auto& r : rows) write_sweep_row(o, r);
}

inline void write_median_csv(std::ostream& o, const std::vector<MedianRow>& rows) {
  o << "defense,T,median_good_spend_rate,median_adversary_spend_rate,max_bad_fraction,valid,invariant_ok\n";
  for (const auto& m : rows)
    o << m.defense << ',' << csv::num(m.T) << ',' << csv::num(m.median_A) << ',' << csv::num(m.median_T_observed)
      << ',' << csv::num(m.max_bad_fraction) << ',' << csv::flag(m.all_valid) << ','
      << csv::flag(m.all_invariants_ok) << '\n';
}

inline void write_epochs_csv(std::ostream& o, const std::vector<EpochRecord>& epochs) {
  o << "index,start_s,end_s,good_joins,rho\n";
  for (const auto& e : epochs)
    o << e.index << ',' << csv::time(e.start) << ',' << csv::time(e.end) << ',' << e.good_joins << ','
      << csv::num(e.rho) << '\n';
}

inline void write_ratio_csv(std::ostream& o, const std::vector<RatioSample>& series) {
  o << "time_s,estimate,true_rho,ratio\n";
  for (const auto& s : series)
    o << csv::time(s.time) << ',' << csv::num(s.estimate) << ',' << csv::num(s.true_rho) << ','
      << csv::num(s.ratio) << '\n';
}

inline void write_intervals_csv(std::ostream& o, const std::vector<IntervalRecord>& v) {
  o << "interval,start_s,end_s,size,estimate,true_rate\n";
  for (const auto& r : v)
    o << r.interval << ',' << csv::time(r.start) << ',' << csv::time(r.end) << ',' << r.size_at_end << ','
      << csv::num(r.estimate_set) << ',' << csv::num(r.true_good_join_rate) << '\n';
}

inline void write_iterations_csv(std::ostream& o, const std::vector<IterationRecord>& v) {
  o << "iter,start_s,end_s,size_at_tau,joins,departs,purge_cost,entrance_cost_good,entrance_cost_bad\n";
  for (const auto& r : v)
    o << r.iter << ',' << csv::time(r.start) << ',' << csv::time(r.end) << ',' << r.size_at_tau << ',' << r.joins
      << ',' << r.departs << ',' << r.purge_cost << ',' << r.entrance_cost_good << ',' << r.entrance_cost_bad
      << '\n';
}

inline void write_committee_csv(std::ostream& o, const std::vector<CommitteeAudit>& v) {
  o << "iteration,size,good_fraction,size_ok,majority_ok\n";
  for (const auto& a : v)
    o << a.iteration << ',' << a.size << ',' << csv::num(a.good_fraction) << ',' << csv::flag(a.size_ok) << ','
      << csv::flag(a.majority_ok) << '\n';
}

inline void write_violations_csv(std::ostream& o, const std::vector<SweepRow>& rows) {
  o << "defense,T,repeat,time_s,kind,detail\n";
  for (const auto& row : rows)
    for (const auto& v : row.run.violations)
      o << row.defense << ',' << csv::num(row.T) << ',' << row.repeat << ',' << csv::time(v.time) << ',' << v.kind
        << ',' << v.detail << '\n';
}

inline void write_estimate_summary_csv(std::ostream& o, const std::vector<EstimateRun>& runs) {
  o << "trace,T,bad_fraction,seed,events,epochs,alpha,beta,samples,min_ratio,max_ratio,envelope_lo,envelope_hi,"
       "envelope_violations,max_bad_fraction\n";
  for (const auto& r : runs) {
    Envelope e = theorem2_envelope(r.alpha, r.beta);
    o << r.trace << ',' << csv::num(r.T) << ',' << csv::num(r.bad_fraction) << ',' << r.seed << ',' << r.events
      << ',' << r.epochs.size() << ',' << csv::num(r.alpha) << ',' << csv::num(r.beta) << ',' << r.samples_checked
      << ',' << csv::num(r.min_ratio) << ',' << csv::num(r.max_ratio) << ',' << csv::num(e.lo) << ','
      << csv::num(e.hi) << ',' << r.envelope_violations << ',' << csv::num(r.max_bad_fraction) << '\n';
  }
}

inline json run_meta(const ExperimentConfig& cfg, const std::string& command, const std::vector<std::uint64_t>& seeds,
                     const json& extra = json::object()) {
  json m;
  m["tool"] = "ergosim";
  m["version"] = kVersion;
  m["schema_version"] = kSchemaVersion;
  m["command"] = command;
  m["config"] = cfg.source;
  json eff;
  eff["trace"] = cfg.trace.name;
  eff["initial_population"] = cfg.trace.spec.initial_population;
  std::vector<std::string> ds;
  for (const auto& d : cfg.defenses) ds.push_back(d.name);
  eff["defenses"] = ds;
  eff["kappa"] = cfg.sim.kappa;
  eff["epsilon"] = cfg.sim.epsilon;
  eff["n0"] = cfg.sim.n0;
  eff["round_len"] = cfg.sim.round_len;
  eff["horizon_s"] = cfg.sim.horizon;
  eff["repeats"] = cfg.repeats;
  eff["sweep_T"] = cfg.sweep_T;
  eff["warmup"] = cfg.warmup == Warmup::None ? "none" : "first_interval";
  eff["committee"] = cfg.committee;
  eff["committee_C"] = cfg.committee_C;
  eff["respond_to_purges"] = cfg.adversary.respond_to_purges;
  eff["initial_bad_fraction"] = cfg.adversary.initial_bad_fraction;
  m["effective"] = eff;
  m["seeds"] = seeds;
  m["notes"] = {
      {"h3_bad_join_bound", "ceil(elapsed * (joins/elapsed - estimate)) clamped to [0, joins]; purge suppressed while "
                            "6 * (floor(kappa * last purge size) + bound + 1) < |S|"},
      {"beta", "measured on a geometric grid of window lengths; a lower bound on the true beta"},
      {"beta_thresholds", {{"sqrt(5 n0/80 - 1)", std::sqrt(std::max(0.0, 5.0 * cfg.sim.n0 / 80.0 - 1.0))},
                           {"sqrt(n0/120 - 1)", std::sqrt(std::max(0.0, cfg.sim.n0 / 120.0 - 1.0))}}},
      {"warmup", "first_interval: churn and GoodJEst run alone until the first interval closes; the defense, "
                 "adversary and ledgers start then and run for horizon_s"}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  return m;
}

inline void write_file(const std::filesystem::path& p, const std::function<void(std::ostream&)>& body) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  body(o);
  if (!o) throw Error(ErrorCode::IoError, "write failed for " + p.string());
}

inline void ensure_dir(const std::filesystem::path& d) {
  std::error_code ec;
  std::filesystem::create_directories(d, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + d.string() + ": " + ec.message());
}

// Everything one simulate run produces, written under out_dir.
inline void emit_outputs(const std::filesystem::path& out_dir, const ExperimentConfig& cfg, const SweepRow& row,
                         const std::vector<EpochRecord>& epochs, const std::vector<RatioSample>& ratio,
                         const json& meta) {
  ensure_dir(out_dir);
  std::vector<SweepRow> rows{row};
  write_file(out_dir / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, rows); });
  write_file(out_dir / "epochs.csv", [&](std::ostream& o) { write_epochs_csv(o, epochs); });
  write_file(out_dir / "ratio.csv", [&](std::ostream& o) { write_ratio_csv(o, ratio); });
  write_file(out_dir / "intervals.csv", [&](std::ostream& o) { write_intervals_csv(o, row.run.intervals); });
  write_file(out_dir / "committee.csv", [&](std::ostream& o) { write_committee_csv(o, row.run.committee_audits); });
  write_file(out_dir / "iterations.csv", [&](std::ostream& o) { write_iterations_csv(o, row.run.iterations); });
  write_file(out_dir / "violations.csv", [&](std::ostream& o) { write_violations_csv(o, rows); });
  write_file(out_dir / "run_meta.json", [&](std::ostream& o) { o << meta.dump(2) << '\n'; });
  (void)cfg;
}

// Single run with full records, as the simulate command does it.
struct SimulateOutput {
  SweepRow row;
  std::vector<EpochRecord> epochs;
  std::vector<RatioSample> ratio;
  std::size_t trace_events = 0;
};

inline SimulateOutput simulate(const ExperimentConfig& cfg, double T) {
  cfg.validate();
  const DefenseSpec& d = cfg.defenses.front();
  SimulateOutput out;
  out.row = SweepRow{d.name, cfg.trace.name, T, 0, cfg.sim.rng_seed, {}};
  if (d.kind == DefenseKind::Remp) {
    out.row.run = remp_result(d, cfg.sim, T, cfg.sim.rng_seed);
    return out;
  }
  ChurnTrace tr = build_trace(cfg.trace, cfg.sim.rng_seed, cfg.trace_duration(), cfg.constraints());
  out.trace_events = tr.events.size();
  RunOptions o = cfg.run_options(d);
  o.record_iterations = true;
  o.record_good_events = true;
  out.row.run = run_simulation(o, tr, T, cfg.sim.rng_seed);
  const RunResult& r = out.row.run;
  out.epochs = detect_epochs(r.good_events, r.initial_good, 0.0, r.measure_end);
  out.ratio = attach_rho(r.estimates, out.epochs);
  return out;
}

}  // namespace ergosim
