#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ergosim/experiment.hpp"

using namespace ergosim;
namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::optional<std::string> defense;
  std::optional<double> T;
  std::optional<double> horizon;
  std::optional<std::string> trace;
  std::optional<std::size_t> threads;
  std::optional<std::size_t> repeats;
};

void add_common(CLI::App* app, Common& c, bool with_T) {
  app->add_option("--config", c.config, "JSON config file");
  app->add_option("--seed", c.seed, "base RNG seed");
  app->add_option("--out", c.out, "output directory");
  app->add_option("--defense", c.defense, "defense name, or a comma-separated list for sweep");
  if (with_T) app->add_option("--T", c.T, "adversary spend rate (units/s)");
  app->add_option("--horizon", c.horizon, "measured run length in seconds");
  app->add_option("--trace", c.trace, "trace preset, or a CSV path");
  app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, sep);)
    if (!part.empty()) out.push_back(part);
  return out;
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? parse_config(json::object()) : load_config(c.config);
  json& src = cfg.source;
  if (c.trace) {
    if (fs::exists(*c.trace)) {
      TraceConfig tc;
      tc.name = fs::path(*c.trace).stem().string();
      tc.spec.source = FileSource{*c.trace, 1.0};
      cfg.trace = tc;
    } else {
      cfg.trace = trace_preset(*c.trace);
    }
    src["trace_override"] = *c.trace;
  }
  if (c.defense) {
    cfg.defenses.clear();
    for (const auto& d : split(*c.defense, ',')) cfg.defenses.push_back(DefenseSpec::parse(d));
    src["defense_override"] = *c.defense;
  }
  if (c.seed) {
    cfg.sim.rng_seed = *c.seed;
    src["seed_override"] = *c.seed;
  }
  if (c.horizon) {
    cfg.sim.horizon = *c.horizon;
    src["horizon_override"] = *c.horizon;
  }
  if (c.threads) cfg.threads = *c.threads;
  if (c.repeats) {
    cfg.repeats = *c.repeats;
    src["repeats_override"] = *c.repeats;
  }
  return cfg;
}

void print_row(const SweepRow& r) {
  std::fprintf(stderr, "%s T=%g repeat=%zu A=%.6g T_obs=%.6g max_bad=%.4f purges=%zu%s\n", r.defense.c_str(), r.T,
               r.repeat, r.run.rates.good_spend_rate_A, r.run.rates.adversary_spend_rate_T, r.run.max_bad_fraction,
               r.run.purges, r.run.invariant_ok() ? "" : " INVARIANT VIOLATED");
}

int cmd_simulate(const Common& c) {
  ExperimentConfig cfg = resolve(c);
  double T = c.T.value_or(cfg.sweep_T.front());
  SimulateOutput out = simulate(cfg, T);
  json extra;
  extra["T"] = T;
  extra["trace_events"] = out.trace_events;
  extra["suppressed_departures"] = out.row.run.suppressed_departures;
  extra["staggered_departures"] = out.row.run.staggered_departures;
  emit_outputs(c.out, cfg, out.row, out.epochs, out.ratio, run_meta(cfg, "simulate", {cfg.sim.rng_seed}, extra));
  print_row(out.row);
  return out.row.run.invariant_ok() ? 0 : 2;
}

int cmd_sweep(const Common& c) {
  ExperimentConfig cfg = resolve(c);
  if (c.T) cfg.sweep_T = {*c.T};
  auto rows = run_sweep(cfg, print_row);
  auto medians = sweep_medians(rows);
  ensure_dir(c.out);
  write_file(fs::path(c.out) / "sweep.csv", [&](std::ostream& o) { write_sweep_csv(o, rows); });
  write_file(fs::path(c.out) / "sweep_median.csv", [&](std::ostream& o) { write_median_csv(o, medians); });
  write_file(fs::path(c.out) / "violations.csv", [&](std::ostream& o) { write_violations_csv(o, rows); });
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < cfg.repeats; ++i) seeds.push_back(cfg.repeat_seed(i));
  std::size_t suppressed = 0, staggered = 0;
  for (const auto& r : rows) {
    suppressed += r.run.suppressed_departures;
    staggered += r.run.staggered_departures;
  }
  json extra;
  extra["rows"] = rows.size();
  extra["suppressed_departures"] = suppressed;
  extra["staggered_departures"] = staggered;
  write_file(fs::path(c.out) / "run_meta.json",
             [&](std::ostream& o) { o << run_meta(cfg, "sweep", seeds, extra).dump(2) << '\n'; });
  bool ok = std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return r.run.invariant_ok(); });
  return ok ? 0 : 2;
}

int cmd_estimate(const Common& c) {
  ExperimentConfig cfg = resolve(c);
  if (c.T) cfg.estimate.T_values = {*c.T};
  auto runs = run_estimate(cfg);
  ensure_dir(c.out);
  write_file(fs::path(c.out) / "estimate_summary.csv", [&](std::ostream& o) { write_estimate_summary_csv(o, runs); });
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::string stem = "T" + csv::num(runs[i].T) + "_f" + std::to_string(i % cfg.estimate.bad_fractions.size());
    write_file(fs::path(c.out) / ("ratio_" + stem + ".csv"), [&](std::ostream& o) { write_ratio_csv(o, runs[i].series); });
    write_file(fs::path(c.out) / ("intervals_" + stem + ".csv"),
               [&](std::ostream& o) { write_intervals_csv(o, runs[i].intervals); });
  }
  if (!runs.empty())
    write_file(fs::path(c.out) / "epochs.csv", [&](std::ostream& o) { write_epochs_csv(o, runs.front().epochs); });
  json extra;
  extra["estimate"] = {{"bad_fractions", cfg.estimate.bad_fractions},
                       {"T", cfg.estimate.T_values},
                       {"events", cfg.estimate.events},
                       {"initial_population", cfg.estimate.initial_population}};
  write_file(fs::path(c.out) / "run_meta.json",
             [&](std::ostream& o) { o << run_meta(cfg, "estimate", {cfg.sim.rng_seed}, extra).dump(2) << '\n'; });
  for (const auto& r : runs)
    std::fprintf(stderr, "T=%g f=%.6g ratio in [%.4g, %.4g] alpha=%.4g beta=%.4g envelope_violations=%zu\n", r.T,
                 r.bad_fraction, r.min_ratio, r.max_ratio, r.alpha, r.beta, r.envelope_violations);
  return 0;
}

ChurnTrace load_or_generate(const Common& c, Seconds duration, ExperimentConfig& cfg) {
  cfg = resolve(c);
  return build_trace(cfg.trace, cfg.sim.rng_seed, duration > 0 ? duration : cfg.trace_duration(), cfg.constraints());
}

int cmd_trace_gen(const Common& c, Seconds duration, double resolution, const std::string& file) {
  ExperimentConfig cfg;
  ChurnTrace tr = load_or_generate(c, duration, cfg);
  std::ofstream o(file);
  if (!o) throw Error(ErrorCode::IoError, "cannot write " + file);
  export_trace_csv(tr, o, resolution);
  std::fprintf(stderr, "%s: %zu initial IDs, %zu events, %zu suppressed, %zu staggered departures\n", file.c_str(),
               tr.initial_ids.size(), tr.events.size(), tr.suppressed_departures, tr.staggered_departures);
  return 0;
}

int cmd_trace_analyze(const Common& c, Seconds duration) {
  ExperimentConfig cfg;
  ChurnTrace tr = load_or_generate(c, duration, cfg);
  std::vector<Uid> initial;
  for (const auto& id : tr.initial_ids) initial.push_back(id.uid);
  auto epochs = detect_epochs(tr.events, initial, 0.0, tr.end_time());
  ensure_dir(c.out);
  write_file(fs::path(c.out) / "epochs.csv", [&](std::ostream& o) { write_epochs_csv(o, epochs); });
  json rep;
  rep["trace"] = cfg.trace.name;
  rep["initial_ids"] = tr.initial_ids.size();
  rep["events"] = tr.events.size();
  rep["end_s"] = tr.end_time();
  rep["epochs"] = epochs.size();
  rep["suppressed_departures"] = tr.suppressed_departures;
  rep["staggered_departures"] = tr.staggered_departures;
  try {
    auto a = estimate_alpha(epochs);
    rep["alpha"] = a.alpha;
    rep["zero_rate_pairs"] = a.zero_rate_pairs;
  } catch (const Error& e) {
    rep["alpha_error"] = e.what();
  }
  try {
    auto b = estimate_beta(epochs, tr.events);
    rep["beta"] = b.beta;
    rep["beta_window_lengths_s"] = b.window_lengths_sampled;
  } catch (const Error& e) {
    rep["beta_error"] = e.what();
  }
  std::cout << rep.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ERGO / GoodJEst Sybil defense simulator"};
  app.require_subcommand(1);
  Common c;

  auto* sim = app.add_subcommand("simulate", "single run with full per-run outputs");
  add_common(sim, c, true);
  auto* sweep = app.add_subcommand("sweep", "spend-rate sweep over T for each defense");
  add_common(sweep, c, true);
  sweep->add_option("--repeats", c.repeats, "repeats per point");
  auto* est = app.add_subcommand("estimate", "GoodJEst accuracy experiment");
  add_common(est, c, true);

  auto* trace = app.add_subcommand("trace", "churn trace tooling");
  trace->require_subcommand(1);
  Seconds duration = 0;
  double resolution = 0;
  std::string file;
  auto* gen = trace->add_subcommand("gen", "generate a synthetic trace as CSV");
  add_common(gen, c, false);
  gen->add_option("--duration", duration, "trace length in seconds (default: warm-up allowance + horizon)");
  gen->add_option("--file", file, "CSV to write")->required();
  gen->add_option("--resolution", resolution, "round event times to this many seconds");
  auto* exp = trace->add_subcommand("export", "re-export a trace file or preset as CSV");
  add_common(exp, c, false);
  exp->add_option("--duration", duration, "trace length in seconds for presets");
  exp->add_option("--file", file, "CSV to write")->required();
  exp->add_option("--resolution", resolution, "round event times to this many seconds");
  auto* ana = trace->add_subcommand("analyze", "epochs and smoothness report");
  add_common(ana, c, false);
  ana->add_option("--duration", duration, "trace length in seconds for presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*sim) return cmd_simulate(c);
    if (*sweep) return cmd_sweep(c);
    if (*est) return cmd_estimate(c);
    if (*gen) return cmd_trace_gen(c, duration, resolution, file);
    if (*exp) return cmd_trace_gen(c, duration, resolution, file);
    if (*ana) return cmd_trace_analyze(c, duration);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
