#pragma once

#include <optional>

#include "ergosim/core.hpp"

namespace ergosim {

// |S(t') △ S(t)| >= ceil(5/8 |S(t')|), in integer form
inline bool interval_trigger(std::size_t sym_diff, std::size_t current_size) {
  return 8 * sym_diff >= 5 * current_size;
}

struct IntervalRecord {
  std::uint64_t interval = 0;
  Seconds start = 0;
  Seconds end = 0;
  std::size_t size_at_end = 0;
  double estimate_set = 0;
  double true_good_join_rate = 0;
};

// GoodJEst state. The snapshot S(t_last) is not stored as a set: uids are
// allocated in join order, so a current member belongs to the snapshot iff it
// joined at or before t_last. The callers report that bit on each departure and
// the symmetric difference is kept as two counters.
struct EstimatorState {
  bool initialized = false;
  Seconds t_last = 0;
  double estimate = 0;
  std::uint64_t interval_index = 0;
  std::size_t added = 0;    // members not in the snapshot
  std::size_t removed = 0;  // snapshot members gone
  bool deferred = false;    // a trigger fired and is waiting for the next purge
};

class GoodJEst {
 public:
  GoodJEst() = default;

  void init(std::size_t size, Seconds now, Seconds init_duration) {
    if (size == 0) throw Error(ErrorCode::EmptySystem, "estimator needs a nonempty system");
    if (!(init_duration > 0)) throw Error(ErrorCode::ConfigError, "init_duration must be positive");
    st_ = EstimatorState{};
    st_.initialized = true;
    st_.t_last = now;
    st_.estimate = static_cast<double>(size) / init_duration;
  }

  bool initialized() const { return st_.initialized; }
  const EstimatorState& state() const { return st_; }

  double estimate() const {
    if (!st_.initialized) throw Error(ErrorCode::Uninitialized, "estimator not initialized");
    return st_.estimate;
  }
  Seconds t_last() const { return st_.t_last; }
  std::size_t sym_diff() const { return st_.added + st_.removed; }

  bool in_snapshot(Seconds joined_at) const { return joined_at <= st_.t_last; }

  void on_join(std::size_t n = 1) { st_.added += n; }
  void on_departure(bool was_in_snapshot, std::size_t n = 1) {
    if (was_in_snapshot)
      st_.removed += n;
    else
      st_.added -= n;
  }

  bool due(std::size_t current_size) const { return interval_trigger(sym_diff(), current_size); }

  // number of additional new members after which the trigger fires, all else fixed
  std::size_t joins_until_due(std::size_t current_size) const {
    auto need = 5 * static_cast<std::int64_t>(current_size) - 8 * static_cast<std::int64_t>(sym_diff());
    return static_cast<std::size_t>(std::max<std::int64_t>(1, ceil_div(need, 3)));
  }

  // Closes the interval at `now`; snapshot becomes S(now).
  IntervalRecord update(Seconds now, std::size_t current_size) {
    if (!(now > st_.t_last)) throw Error(ErrorCode::ZeroElapsed, "interval of zero length");
    IntervalRecord rec;
    rec.interval = st_.interval_index;
    rec.start = st_.t_last;
    rec.end = now;
    rec.size_at_end = current_size;
    double e = static_cast<double>(current_size) / (now - st_.t_last);
    if (e > 0) st_.estimate = e;
    rec.estimate_set = st_.estimate;
    st_.t_last = now;
    st_.added = 0;
    st_.removed = 0;
    st_.deferred = false;
    ++st_.interval_index;
    return rec;
  }

  // Checks the trigger after a membership change. With `defer` set (heuristic
  // H1) a firing trigger is parked until flush_deferred() at the next purge.
  std::optional<IntervalRecord> on_membership_change(Seconds now, std::size_t current_size, bool defer = false) {
    if (st_.deferred || !due(current_size)) return std::nullopt;
    if (defer) {
      st_.deferred = true;
      return std::nullopt;
    }
    return update(now, current_size);
  }

  bool pending() const { return st_.deferred; }

  std::optional<IntervalRecord> flush_deferred(Seconds now, std::size_t current_size) {
    if (!st_.deferred) return std::nullopt;
    return update(now, current_size);
  }

 private:
  EstimatorState st_;
};

inline GoodJEst init_estimator(const SystemView& view, Seconds init_duration) {
  GoodJEst e;
  e.init(view.size(), view.now, init_duration);
  return e;
}

inline double current_estimate(const GoodJEst& e) { return e.estimate(); }

// Feeds one applied event (view already updated) to the estimator.
inline std::optional<IntervalRecord> on_membership_change(GoodJEst& e, const SystemView& view, const Event& ev) {
  if (ev.is_join())
    e.on_join();
  else
    e.on_departure(e.in_snapshot(view.joined_at(ev.uid())));
  return e.on_membership_change(view.now, view.size());
}

}  // namespace ergosim
