#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ergosim/core.hpp"

namespace ergosim {

struct EpochRecord {
  std::size_t index = 0;
  Seconds start = 0;
  Seconds end = 0;
  std::size_t good_joins = 0;
  double rho = 0;
  bool partial = false;
};

// |G(t') △ G(t)| >= ceil(3/4 |G(t)|), integer form
inline bool epoch_trigger(std::size_t sym_diff, std::size_t size_at_start) {
  return 4 * sym_diff >= 3 * size_at_start;
}

// Definition 1 epochs over a good-only event stream. Epoch-start membership of
// a departing ID is decided by its join time, as in the estimator.
inline std::vector<EpochRecord> detect_epochs(const std::vector<Event>& good_events,
                                              const std::vector<Uid>& initial_good, Seconds start = 0.0,
                                              std::optional<Seconds> run_end = std::nullopt) {
  std::vector<EpochRecord> out;
  std::vector<Seconds> joined;
  auto join_time = [&](Uid u) { return u < joined.size() ? joined[u] : -kNever; };
  for (Uid u : initial_good) {
    if (u >= joined.size()) joined.resize(u + 1, -kNever);
    joined[u] = -kNever;
  }
  std::size_t size = initial_good.size();
  std::size_t g0 = size, added = 0, removed = 0, joins = 0;
  Seconds t0 = start;
  for (const auto& ev : good_events) {
    if (ev.is_join()) {
      Uid u = ev.uid();
      if (u >= joined.size()) joined.resize(u + 1, -kNever);
      joined[u] = ev.time;
      ++added;
      ++joins;
      ++size;
    } else {
      if (join_time(ev.uid()) <= t0)
        ++removed;
      else
        --added;
      --size;
    }
    if (epoch_trigger(added + removed, g0)) {
      EpochRecord r;
      r.index = out.size();
      r.start = t0;
      r.end = ev.time;
      r.good_joins = joins;
      r.rho = r.end > r.start ? static_cast<double>(joins) / (r.end - r.start) : 0.0;
      out.push_back(r);
      t0 = ev.time;
      g0 = size;
      added = removed = joins = 0;
    }
  }
  EpochRecord last;
  last.index = out.size();
  last.start = t0;
  last.end = run_end ? std::max(*run_end, t0) : (good_events.empty() ? t0 : std::max(t0, good_events.back().time));
  last.good_joins = joins;
  last.rho = last.end > last.start ? static_cast<double>(joins) / (last.end - last.start) : 0.0;
  last.partial = true;
  out.push_back(last);
  return out;
}

struct AlphaEstimate {
  double alpha = 1.0;
  std::size_t pairs_used = 0;
  std::size_t zero_rate_pairs = 0;  // skipped
};

inline AlphaEstimate estimate_alpha(const std::vector<EpochRecord>& epochs) {
  std::vector<const EpochRecord*> full;
  for (const auto& e : epochs)
    if (!e.partial) full.push_back(&e);
  if (full.size() < 2) throw Error(ErrorCode::InsufficientEpochs, "need two complete epochs");
  AlphaEstimate a;
  for (std::size_t i = 1; i < full.size(); ++i) {
    double p = full[i - 1]->rho, c = full[i]->rho;
    if (!(p > 0) || !(c > 0)) {
      ++a.zero_rate_pairs;
      continue;
    }
    a.alpha = std::max({a.alpha, c / p, p / c});
    ++a.pairs_used;
  }
  if (a.pairs_used == 0) throw Error(ErrorCode::InsufficientEpochs, "every epoch pair has a zero rate");
  return a;
}

struct BetaEstimate {
  double beta = 1.0;
  std::vector<Seconds> window_lengths_sampled;
  std::size_t windows = 0;
};

// geometric grid of `count` lengths from lo to hi
inline std::vector<Seconds> geometric_grid(Seconds lo, Seconds hi, std::size_t count = 8) {
  std::vector<Seconds> g;
  if (!(hi > lo) || count < 2) {
    g.push_back(std::min(lo, hi));
    return g;
  }
  for (std::size_t i = 0; i < count; ++i)
    g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1)));
  return g;
}

namespace detail {

// most events in any window [s, s + len) starting at an event
inline std::size_t max_in_window(const std::vector<Seconds>& ts, Seconds len) {
  std::size_t best = 0;
  for (std::size_t i = 0, j = 0; i < ts.size(); ++i) {
    if (j < i) j = i;
    while (j < ts.size() && ts[j] < ts[i] + len) ++j;
    best = std::max(best, j - i);
  }
  return best;
}

// fewest events in any window (s, s + len] inside [lo, hi], s at lo or at an event
inline std::size_t min_in_window(const std::vector<Seconds>& ts, Seconds len, Seconds lo, Seconds hi) {
  std::size_t best = ts.size();
  auto count_from = [&](std::size_t first, Seconds s) {
    auto e = std::upper_bound(ts.begin() + static_cast<std::ptrdiff_t>(first), ts.end(), s + len);
    return static_cast<std::size_t>(e - ts.begin()) - first;
  };
  if (lo + len <= hi) {
    auto first = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), lo) - ts.begin());
    best = std::min(best, count_from(first, lo));
  }
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (ts[i] + len > hi) break;
    best = std::min(best, count_from(i + 1, ts[i]));
  }
  return best;
}

}  // namespace detail

// Smallest beta satisfying the join-lower, join-upper and departure-upper
// inequalities over sliding windows of each sampled length, per complete
// epoch. With an empty grid, each epoch uses 8 lengths from 1 s to a quarter
// of its length. A lower bound on the true beta.
inline BetaEstimate estimate_beta(const std::vector<EpochRecord>& epochs, const std::vector<Event>& good_events,
                                  const std::vector<Seconds>& window_grid = {}) {
  BetaEstimate out;
  std::size_t cursor = 0;
  for (const auto& ep : epochs) {
    if (ep.partial || !(ep.rho > 0)) continue;
    std::vector<Seconds> jt, dt;
    while (cursor < good_events.size() && good_events[cursor].time <= ep.start) ++cursor;
    for (std::size_t k = cursor; k < good_events.size() && good_events[k].time <= ep.end; ++k)
      (good_events[k].is_join() ? jt : dt).push_back(good_events[k].time);
    Seconds span = ep.end - ep.start;
    std::vector<Seconds> grid = window_grid.empty() ? geometric_grid(1.0, span / 4.0) : window_grid;
    for (Seconds len : grid) {
      if (!(len > 0) || len > span) continue;
      double expect = len * ep.rho;
      std::size_t jmax = detail::max_in_window(jt, len);
      std::size_t dmax = detail::max_in_window(dt, len);
      std::size_t jmin = detail::min_in_window(jt, len, ep.start, ep.end);
      out.beta = std::max(out.beta, static_cast<double>(jmax) / expect);
      out.beta = std::max(out.beta, static_cast<double>(dmax) / expect);
      double lower = expect / static_cast<double>(jmin + 1);
      if (lower >= 1.0) out.beta = std::max(out.beta, std::nextafter(lower, kNever));
      ++out.windows;
      if (std::find(out.window_lengths_sampled.begin(), out.window_lengths_sampled.end(), len) ==
          out.window_lengths_sampled.end())
        out.window_lengths_sampled.push_back(len);
    }
  }
  if (out.windows == 0) throw Error(ErrorCode::InsufficientData, "no window could be sampled");
  return out;
}

struct SpendRates {
  double good_spend_rate_A = 0;
  double adversary_spend_rate_T = 0;
  double good_entrance_rate = 0;
  double good_purge_rate = 0;
  double good_periodic_rate = 0;
};

inline SpendRates compute_spend_rates(const CostLedger& l, Seconds horizon) {
  if (!(horizon > 0)) throw Error(ErrorCode::ConfigError, "horizon must be positive");
  SpendRates r;
  r.good_spend_rate_A = static_cast<double>(l.good_total()) / horizon;
  r.adversary_spend_rate_T = static_cast<double>(l.adversary_total()) / horizon;
  r.good_entrance_rate = static_cast<double>(l.good_entrance) / horizon;
  r.good_purge_rate = static_cast<double>(l.good_purge) / horizon;
  r.good_periodic_rate = static_cast<double>(l.good_periodic) / horizon;
  return r;
}

struct RatioSample {
  Seconds time = 0;
  double estimate = 0;
  double true_rho = 0;
  double ratio = 0;
  std::uint64_t interval = 0;  // estimator interval index the estimate was set at
};

struct Envelope {
  double lo = 0;
  double hi = 0;
};

inline Envelope theorem2_envelope(double alpha, double beta) {
  double a4 = std::pow(alpha, 4);
  return {1.0 / (418.0 * a4 * std::pow(beta, 3)), 267.0 * a4 * std::pow(beta, 5)};
}

// counts samples set after the first interval that fall outside the envelope
inline std::size_t theorem2_envelope_check(const std::vector<RatioSample>& series, double alpha, double beta) {
  Envelope e = theorem2_envelope(alpha, beta);
  std::size_t bad = 0;
  for (const auto& s : series)
    if (s.interval > 0 && !(s.ratio >= e.lo && s.ratio <= e.hi)) ++bad;
  return bad;
}

// rho of the epoch containing each sample time (epochs are (start, end])
inline std::vector<RatioSample> attach_rho(std::vector<RatioSample> series, const std::vector<EpochRecord>& epochs) {
  for (auto& s : series) {
    auto it = std::lower_bound(epochs.begin(), epochs.end(), s.time,
                               [](const EpochRecord& e, Seconds t) { return e.end < t; });
    if (it == epochs.end() && !epochs.empty()) it = std::prev(epochs.end());
    s.true_rho = it == epochs.end() ? 0.0 : it->rho;
    s.ratio = s.true_rho > 0 ? s.estimate / s.true_rho : kNever;
  }
  return series;
}

// Per sub-interval accounting: inside one (interval ∩ iteration) piece, time is
// cut into consecutive chunks of length 1/J̃ from the piece start; each chunk
// must satisfy bad joins <= floor(sqrt(2 * adversary spend)).
class SubIntervalMonitor {
 public:
  void open_piece(Seconds start, double estimate) {
    flush();
    start_ = start;
    width_ = estimate > 0 ? 1.0 / estimate : kNever;
    index_ = 0;
    open_ = true;
  }

  void record(Seconds t, std::size_t bad_joins, Units spend) {
    if (!open_) return;
    std::int64_t k = 0;
    if (t > start_ && std::isfinite(width_)) k = static_cast<std::int64_t>(std::ceil((t - start_) / width_)) - 1;
    if (k < 0) k = 0;
    if (k != index_) {
      flush();
      index_ = k;
    }
    joins_ += bad_joins;
    spend_ += spend;
  }

  void flush() {
    if (joins_ == 0 && spend_ == 0) return;
    ++checked_;
    auto cap = static_cast<std::size_t>(isqrt(2 * spend_));
    if (joins_ > cap) {
      ++violations_;
      if (!first_violation_) first_violation_ = start_ + static_cast<double>(index_) * width_;
    }
    max_joins_ = std::max(max_joins_, joins_);
    joins_ = 0;
    spend_ = 0;
  }

  std::size_t checked() const { return checked_; }
  std::size_t violations() const { return violations_; }
  std::optional<Seconds> first_violation() const { return first_violation_; }

 private:
  bool open_ = false;
  Seconds start_ = 0;
  Seconds width_ = kNever;
  std::int64_t index_ = 0;
  std::size_t joins_ = 0;
  Units spend_ = 0;
  std::size_t checked_ = 0;
  std::size_t violations_ = 0;
  std::size_t max_joins_ = 0;
  std::optional<Seconds> first_violation_;
};

// Counts estimator intervals overlapping each iteration (positive-length overlap).
class IterationOverlapMonitor {
 public:
  void iteration_start(Seconds tau) {
    tau_ = tau;
    boundaries_ = 0;
  }
  void interval_boundary(Seconds t) {
    if (t > tau_) ++boundaries_;
  }
  // returns the number of intervals the closing iteration overlapped
  std::size_t iteration_end(Seconds t) {
    (void)t;
    std::size_t n = boundaries_ + 1;
    ++iterations_;
    max_seen_ = std::max(max_seen_, n);
    if (n > 2) ++violations_;
    return n;
  }
  std::size_t iterations() const { return iterations_; }
  std::size_t violations() const { return violations_; }
  std::size_t max_seen() const { return max_seen_; }

 private:
  Seconds tau_ = 0;
  std::size_t boundaries_ = 0;
  std::size_t iterations_ = 0;
  std::size_t violations_ = 0;
  std::size_t max_seen_ = 0;
};

}  // namespace ergosim
