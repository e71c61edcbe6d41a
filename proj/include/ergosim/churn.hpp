#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "ergosim/core.hpp"

namespace ergosim {

struct FileSource {
  std::string path;
  // joins before this time (and still present) are promoted to the initial population
  Seconds initial_cutoff_s = 1.0;
};

struct WeibullSource {
  double shape = 1.0;
  double scale_hours = 1.0;
};

struct ExponentialSource {
  double mean_hours = 1.0;
  double arrival_rate_per_s = 1.0;
};

struct TraceSpec {
  std::variant<FileSource, WeibullSource, ExponentialSource> source;
  std::size_t initial_population = 10000;
  Seconds duration = 10000.0;
  std::uint64_t seed = 1;
};

// model constraints the generators enforce on good churn
struct ChurnConstraints {
  std::size_t n0 = 4;
  double epsilon = 1.0 / 12.0;
  Seconds round_len = 1.0;
};

struct ChurnTrace {
  std::vector<Identity> initial_ids;
  std::vector<Event> events;
  std::size_t suppressed_departures = 0;
  std::size_t staggered_departures = 0;
  std::vector<std::string> names;  // external id per uid, file traces only

  Uid uid_bound() const {
    Uid b = 0;
    for (const auto& id : initial_ids) b = std::max(b, id.uid + 1);
    for (const auto& ev : events) b = std::max(b, ev.uid() + 1);
    return b;
  }
  Seconds end_time() const { return events.empty() ? 0.0 : events.back().time; }
};

// ---- file ingestion ----

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

inline ChurnTrace parse_trace_csv(std::istream& in, std::optional<std::size_t> limit = std::nullopt,
                                  const std::string& origin = "trace") {
  ChurnTrace tr;
  std::unordered_map<std::string, Uid> present;
  std::string line;
  std::size_t lineno = 0;
  double prev_raw = -kNever;
  std::size_t same_count = 0;
  Seconds prev_time = -kNever;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (limit && tr.events.size() >= *limit) break;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cols = detail::split_csv(line);
    double raw = 0;
    bool numeric = cols.size() == 3 && detail::parse_double(cols[0], raw);
    if (first_content) {
      first_content = false;
      if (!numeric && !cols.empty() && !detail::parse_double(cols[0], raw)) continue;  // header
    }
    auto where = origin + ":" + std::to_string(lineno);
    if (cols.size() != 3) throw Error(ErrorCode::ParseError, where + ": expected 3 columns");
    if (!numeric) throw Error(ErrorCode::ParseError, where + ": bad time '" + cols[0] + "'");
    if (raw < prev_raw)
      throw Error(ErrorCode::OrderError, where + ": time " + cols[0] + " decreases");
    same_count = raw == prev_raw ? same_count + 1 : 0;
    prev_raw = raw;
    Seconds t = raw + 1e-6 * static_cast<double>(same_count);
    if (!(t > prev_time)) throw Error(ErrorCode::OrderError, where + ": jittered time collides");
    prev_time = t;
    const std::string& ev = cols[1];
    const std::string& name = cols[2];
    if (name.empty()) throw Error(ErrorCode::ParseError, where + ": empty id");
    if (ev == "join") {
      if (present.count(name))
        throw Error(ErrorCode::ParseError, where + ": id " + name + " joins while present");
      Uid u = tr.names.size();
      tr.names.push_back(name);
      present.emplace(name, u);
      tr.events.push_back(Event::join(t, u));
    } else if (ev == "depart") {
      auto it = present.find(name);
      if (it == present.end())
        throw Error(ErrorCode::ParseError, where + ": departure of unknown id " + name);
      tr.events.push_back(Event::depart(t, it->second));
      present.erase(it);
    } else {
      throw Error(ErrorCode::ParseError, where + ": unknown event '" + ev + "'");
    }
  }
  return tr;
}

inline ChurnTrace ingest_trace_file(const std::string& path,
                                    std::optional<std::size_t> limit = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_trace_csv(in, limit, path);
}

// Moves joins before `cutoff` whose ID is still present at the cutoff into the
// initial population. Uids keep their join order.
inline ChurnTrace promote_initial(ChurnTrace tr, Seconds cutoff) {
  std::vector<char> departed_early(tr.uid_bound(), 0);
  for (const auto& ev : tr.events) {
    if (ev.time >= cutoff) break;
    if (!ev.is_join()) departed_early[ev.uid()] = 1;
  }
  std::vector<Event> rest;
  for (const auto& ev : tr.events) {
    if (ev.time < cutoff) {
      if (ev.is_join() && !departed_early[ev.uid()])
        tr.initial_ids.push_back(Identity{ev.uid(), Kind::Good, 0.0});
      continue;
    }
    rest.push_back(ev);
  }
  tr.events = std::move(rest);
  return tr;
}

// ---- generators ----

inline double weibull_mean(double shape, double scale) { return scale * std::tgamma(1.0 + 1.0 / shape); }

inline double mean_session_seconds(const TraceSpec& spec) {
  if (auto* w = std::get_if<WeibullSource>(&spec.source))
    return weibull_mean(w->shape, w->scale_hours * 3600.0);
  if (auto* e = std::get_if<ExponentialSource>(&spec.source)) return e->mean_hours * 3600.0;
  return 0.0;
}

inline double arrival_rate(const TraceSpec& spec) {
  if (auto* e = std::get_if<ExponentialSource>(&spec.source)) return e->arrival_rate_per_s;
  if (std::holds_alternative<WeibullSource>(spec.source))
    return static_cast<double>(spec.initial_population) / mean_session_seconds(spec);
  return 0.0;
}

inline void validate_spec(const TraceSpec& spec, std::size_t n0) {
  if (auto* w = std::get_if<WeibullSource>(&spec.source)) {
    if (!(w->shape > 0) || !(w->scale_hours > 0))
      throw Error(ErrorCode::ConfigError, "Weibull shape and scale must be positive");
  } else if (auto* e = std::get_if<ExponentialSource>(&spec.source)) {
    if (!(e->mean_hours > 0) || !(e->arrival_rate_per_s > 0))
      throw Error(ErrorCode::ConfigError, "session mean and arrival rate must be positive");
  }
  if (!(spec.duration >= 0)) throw Error(ErrorCode::ConfigError, "duration must be non-negative");
  if (!std::holds_alternative<FileSource>(spec.source) && spec.initial_population < n0)
    throw Error(ErrorCode::ConfigError, "initial population below n0");
}

// session length sampler (seconds) for a synthetic source
class SessionSampler {
 public:
  explicit SessionSampler(const TraceSpec& spec) {
    if (auto* w = std::get_if<WeibullSource>(&spec.source)) {
      shape_ = w->shape;
      scale_ = w->scale_hours * 3600.0;
    } else if (auto* e = std::get_if<ExponentialSource>(&spec.source)) {
      shape_ = 1.0;
      scale_ = e->mean_hours * 3600.0;
    } else {
      throw Error(ErrorCode::ConfigError, "file traces have no session model");
    }
  }

  Seconds draw(Rng& rng) const { return std::weibull_distribution<double>(shape_, scale_)(rng); }

  // remaining session of an ID observed at a random instant of a stationary
  // population: length-biased session L, residual U*L
  Seconds draw_residual(Rng& rng) const {
    std::gamma_distribution<double> g(1.0 + 1.0 / shape_, 1.0);
    double len = scale_ * std::pow(g(rng), 1.0 / shape_);
    return len * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  }

 private:
  double shape_ = 1.0;
  double scale_ = 1.0;
};

namespace detail {

// Merges arrivals and scheduled departures in time order, enforcing the n0
// floor and the per-round departure cap by rescheduling departures one round later.
inline ChurnTrace assemble(const TraceSpec& spec, const ChurnConstraints& cons, Rng& rng,
                           const SessionSampler& sessions, double rate) {
  struct Pending {
    Seconds t;
    std::uint64_t seq;
    Uid uid;
    bool operator>(const Pending& o) const { return t != o.t ? t > o.t : seq > o.seq; }
  };
  ChurnTrace tr;
  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> departs;
  std::uint64_t seq = 0;
  const Seconds horizon = spec.duration;
  for (std::size_t i = 0; i < spec.initial_population; ++i) {
    Uid u = i;
    tr.initial_ids.push_back(Identity{u, Kind::Good, 0.0});
    Seconds d = sessions.draw_residual(rng);
    if (d < horizon) departs.push({d, seq++, u});
  }
  std::size_t population = spec.initial_population;
  Uid next_uid = spec.initial_population;
  std::exponential_distribution<double> gap(rate);
  Seconds next_arrival = horizon > 0 ? gap(rng) : kNever;
  std::int64_t round = -1;
  std::size_t round_departs = 0;
  Seconds last = 0.0;
  auto stamp = [&](Seconds t) {
    if (!(t > last)) t = std::nextafter(last, kNever);
    last = t;
    return t;
  };
  while (true) {
    Seconds td = departs.empty() ? kNever : departs.top().t;
    if (next_arrival >= horizon && td >= horizon) break;
    if (next_arrival <= td) {
      Seconds t = stamp(next_arrival);
      Uid u = next_uid++;
      tr.events.push_back(Event::join(t, u));
      ++population;
      Seconds end = t + sessions.draw(rng);
      if (end < horizon) departs.push({end, seq++, u});
      next_arrival = t + gap(rng);
      continue;
    }
    Pending p = departs.top();
    departs.pop();
    auto r = static_cast<std::int64_t>(std::floor(p.t / cons.round_len));
    if (r != round) {
      round = r;
      round_departs = 0;
    }
    bool floor_hit = population <= cons.n0;
    bool cap_hit = static_cast<double>(round_departs + 1) > cons.epsilon * static_cast<double>(population);
    if (floor_hit || cap_hit) {
      (floor_hit ? tr.suppressed_departures : tr.staggered_departures) += 1;
      Seconds again = p.t + cons.round_len;
      if (again < horizon) departs.push({again, seq++, p.uid});
      continue;
    }
    tr.events.push_back(Event::depart(stamp(p.t), p.uid));
    --population;
    ++round_departs;
  }
  return tr;
}

}  // namespace detail

inline ChurnTrace generate_weibull_trace(const TraceSpec& spec, Rng& rng,
                                         const ChurnConstraints& cons = {}) {
  if (!std::holds_alternative<WeibullSource>(spec.source))
    throw Error(ErrorCode::ConfigError, "not a Weibull source");
  validate_spec(spec, cons.n0);
  SessionSampler s(spec);
  return detail::assemble(spec, cons, rng, s, arrival_rate(spec));
}

inline ChurnTrace generate_exponential_trace(const TraceSpec& spec, Rng& rng,
                                             const ChurnConstraints& cons = {}) {
  if (!std::holds_alternative<ExponentialSource>(spec.source))
    throw Error(ErrorCode::ConfigError, "not an exponential-session source");
  validate_spec(spec, cons.n0);
  SessionSampler s(spec);
  return detail::assemble(spec, cons, rng, s, arrival_rate(spec));
}

// Builds the trace a spec describes; synthetic sources are seeded from spec.seed.
inline ChurnTrace make_trace(const TraceSpec& spec, const ChurnConstraints& cons = {}) {
  if (auto* f = std::get_if<FileSource>(&spec.source)) {
    ChurnTrace tr = promote_initial(ingest_trace_file(f->path), f->initial_cutoff_s);
    if (spec.duration > 0) {
      auto it = std::find_if(tr.events.begin(), tr.events.end(),
                             [&](const Event& e) { return e.time >= spec.duration; });
      tr.events.erase(it, tr.events.end());
    }
    return tr;
  }
  Rng rng(spec.seed);
  if (std::holds_alternative<WeibullSource>(spec.source)) return generate_weibull_trace(spec, rng, cons);
  return generate_exponential_trace(spec, rng, cons);
}

inline ChurnTrace truncate_events(ChurnTrace tr, std::size_t max_events) {
  if (tr.events.size() > max_events) tr.events.resize(max_events);
  return tr;
}

// Replays a trace through the membership model; throws TraceError on any
// inconsistency or floor breach.
inline void validate_trace(const ChurnTrace& tr, std::size_t n0) {
  SystemView v;
  v.now = -kNever;
  try {
    for (const auto& id : tr.initial_ids) v.add_initial(id);
    for (const auto& ev : tr.events) {
      v.apply(ev);
      if (v.good_members.size() < n0)
        throw Error(ErrorCode::FloorViolation, "good population below n0 at t=" + std::to_string(ev.time));
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::TraceError, e.what());
  }
}

inline std::string trace_id_name(const ChurnTrace& tr, Uid u) {
  return u < tr.names.size() ? tr.names[u] : "n" + std::to_string(u);
}

// Writes `time_s,event,id`. Initial IDs are written as joins at time 0. With a
// positive resolution, times are floored to multiples of it.
inline void export_trace_csv(const ChurnTrace& tr, std::ostream& out, Seconds resolution = 0) {
  out << "time_s,event,id\n";
  char buf[64];
  auto fmt = [&](Seconds t) {
    if (resolution > 0) t = std::floor(t / resolution) * resolution;
    std::snprintf(buf, sizeof buf, resolution >= 1 ? "%.0f" : "%.6f", t);
    return buf;
  };
  for (const auto& id : tr.initial_ids) out << fmt(0.0) << ",join," << trace_id_name(tr, id.uid) << '\n';
  for (const auto& ev : tr.events)
    out << fmt(ev.time) << (ev.is_join() ? ",join," : ",depart,") << trace_id_name(tr, ev.uid()) << '\n';
}

}  // namespace ergosim
