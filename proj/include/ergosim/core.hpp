#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ergosim {

using Uid = std::uint64_t;
using Seconds = double;
using Units = std::int64_t;  // challenge-units; a k-hard challenge costs k
using Rng = std::mt19937_64;

inline constexpr Seconds kNever = std::numeric_limits<Seconds>::infinity();

enum class Kind : std::uint8_t { Good, Bad };

enum class ErrorCode {
  StaleEvent,
  UnknownDeparture,
  DuplicateId,
  FloorViolation,
  ParseError,
  OrderError,
  ConfigError,
  TraceError,
  EmptySystem,
  ZeroElapsed,
  Uninitialized,
  BadEstimate,
  TooSmall,
  InsufficientEpochs,
  InsufficientData,
  IoError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::StaleEvent: return "StaleEvent";
    case ErrorCode::UnknownDeparture: return "UnknownDeparture";
    case ErrorCode::DuplicateId: return "DuplicateID";
    case ErrorCode::FloorViolation: return "FloorViolation";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::OrderError: return "OrderError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::TraceError: return "TraceError";
    case ErrorCode::EmptySystem: return "EmptySystem";
    case ErrorCode::ZeroElapsed: return "ZeroElapsed";
    case ErrorCode::Uninitialized: return "Uninitialized";
    case ErrorCode::BadEstimate: return "BadEstimate";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::InsufficientEpochs: return "InsufficientEpochs";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// splitmix64 finalizer; used to derive independent stream seeds from one run seed
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Identity {
  Uid uid = 0;
  Kind kind = Kind::Good;
  Seconds joined_at = 0;
};

struct Join {
  Identity id;
};
struct Depart {
  Uid uid = 0;
};

struct Event {
  Seconds time = 0;
  std::variant<Join, Depart> payload;

  bool is_join() const { return std::holds_alternative<Join>(payload); }
  Uid uid() const {
    return is_join() ? std::get<Join>(payload).id.uid : std::get<Depart>(payload).uid;
  }
  static Event join(Seconds t, Uid uid, Kind kind = Kind::Good) {
    return Event{t, Join{Identity{uid, kind, t}}};
  }
  static Event depart(Seconds t, Uid uid) { return Event{t, Depart{uid}}; }
};

// Set of uids with O(1) insert/erase/contains and indexable storage for uniform
// sampling. Uids are join counters, so a dense slot table indexed by uid is used.
class IdSet {
 public:
  IdSet() = default;
  IdSet(std::initializer_list<Uid> ids) {
    for (Uid u : ids) insert(u);
  }
  template <class It>
  IdSet(It first, It last) {
    for (; first != last; ++first) insert(*first);
  }

  bool insert(Uid u) {
    if (u >= kMaxUid) throw Error(ErrorCode::ConfigError, "uid too large for dense set");
    if (u >= slot_.size()) slot_.resize(std::max<std::size_t>(u + 1, slot_.size() * 2), npos);
    if (slot_[u] != npos) return false;
    slot_[u] = static_cast<std::uint32_t>(items_.size());
    items_.push_back(u);
    return true;
  }

  bool erase(Uid u) {
    if (!contains(u)) return false;
    std::uint32_t pos = slot_[u];
    Uid last = items_.back();
    items_[pos] = last;
    slot_[last] = pos;
    items_.pop_back();
    slot_[u] = npos;
    return true;
  }

  bool contains(Uid u) const { return u < slot_.size() && slot_[u] != npos; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  Uid at(std::size_t i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  void clear() {
    for (Uid u : items_) slot_[u] = npos;
    items_.clear();
  }

  std::vector<Uid> sorted() const {
    std::vector<Uid> v = items_;
    std::sort(v.begin(), v.end());
    return v;
  }

  bool operator==(const IdSet& o) const { return size() == o.size() && sorted() == o.sorted(); }

 private:
  static constexpr std::uint32_t npos = std::numeric_limits<std::uint32_t>::max();
  static constexpr Uid kMaxUid = Uid{1} << 32;
  std::vector<Uid> items_;
  std::vector<std::uint32_t> slot_;
};

inline std::size_t symmetric_difference_size(const IdSet& a, const IdSet& b) {
  std::size_t common = 0;
  const IdSet& small = a.size() <= b.size() ? a : b;
  const IdSet& large = a.size() <= b.size() ? b : a;
  for (Uid u : small) common += large.contains(u) ? 1 : 0;
  return a.size() + b.size() - 2 * common;
}

// Defense-visible membership plus the audit-only good/bad partition.
class SystemView {
 public:
  IdSet good_members;
  IdSet bad_members;
  Seconds now = 0;

  std::size_t size() const { return good_members.size() + bad_members.size(); }
  bool contains(Uid u) const { return good_members.contains(u) || bad_members.contains(u); }

  IdSet members() const {
    IdSet s;
    for (Uid u : good_members) s.insert(u);
    for (Uid u : bad_members) s.insert(u);
    return s;
  }

  // join time of a current or former member; 0 for members placed directly
  Seconds joined_at(Uid u) const { return u < joined_.size() ? joined_[u] : 0.0; }

  void add_initial(const Identity& id) {
    if (contains(id.uid)) throw Error(ErrorCode::DuplicateId, "uid " + std::to_string(id.uid));
    (id.kind == Kind::Good ? good_members : bad_members).insert(id.uid);
    record_join_time(id.uid, id.joined_at);
  }

  void apply(const Event& ev) {
    if (!(ev.time > now))
      throw Error(ErrorCode::StaleEvent, "event at " + std::to_string(ev.time) +
                                             " not after " + std::to_string(now));
    if (ev.is_join()) {
      const Identity& id = std::get<Join>(ev.payload).id;
      if (contains(id.uid)) throw Error(ErrorCode::DuplicateId, "uid " + std::to_string(id.uid));
      (id.kind == Kind::Good ? good_members : bad_members).insert(id.uid);
      record_join_time(id.uid, ev.time);
    } else {
      Uid u = std::get<Depart>(ev.payload).uid;
      if (!good_members.erase(u) && !bad_members.erase(u))
        throw Error(ErrorCode::UnknownDeparture, "uid " + std::to_string(u));
    }
    now = ev.time;
  }

 private:
  void record_join_time(Uid u, Seconds t) {
    if (u >= joined_.size()) joined_.resize(u + 1, 0.0);
    joined_[u] = t;
  }
  std::vector<Seconds> joined_;
};

inline SystemView apply_event(SystemView view, const Event& ev) {
  view.apply(ev);
  return view;
}

inline Uid sample_uniform_good_departure(const SystemView& view, std::size_t n0, Rng& rng) {
  if (view.good_members.size() <= n0 || view.good_members.empty())
    throw Error(ErrorCode::FloorViolation, "good population at floor " + std::to_string(n0));
  std::uniform_int_distribution<std::size_t> pick(0, view.good_members.size() - 1);
  return view.good_members.at(pick(rng));
}

struct SimConfig {
  std::size_t n0 = 4;
  double kappa = 1.0 / 18.0;
  Seconds round_len = 1.0;
  double epsilon = 1.0 / 12.0;
  std::uint64_t rng_seed = 1;
  Seconds horizon = 10000.0;

  void validate() const {
    if (n0 < 4) throw Error(ErrorCode::ConfigError, "n0 must be at least 4");
    if (!(kappa > 0.0) || kappa > 1.0 / 18.0 + 1e-15)
      throw Error(ErrorCode::ConfigError, "kappa must be in (0, 1/18]");
    if (!(round_len > 0.0)) throw Error(ErrorCode::ConfigError, "round_len must be positive");
    // 1/12 itself is accepted: it is the documented default
    if (!(epsilon > 0.0) || epsilon > 1.0 / 12.0 + 1e-15)
      throw Error(ErrorCode::ConfigError, "epsilon must be in (0, 1/12]");
    if (!(horizon > 0.0)) throw Error(ErrorCode::ConfigError, "horizon must be positive");
  }
};

struct SpendSample {
  Seconds time = 0;
  double good_rate = 0;
  double adversary_rate = 0;
};

struct CostLedger {
  Units good_entrance = 0;
  Units good_purge = 0;
  Units good_periodic = 0;
  Units adversary_entrance = 0;
  Units adversary_refused = 0;  // entrance cost burned on attempts a classifier refused
  Units adversary_retention = 0;
  Units adversary_upkeep = 0;
  std::vector<SpendSample> samples;

  Units good_total() const { return good_entrance + good_purge + good_periodic; }
  Units adversary_total() const {
    return adversary_entrance + adversary_refused + adversary_retention + adversary_upkeep;
  }
};

// floor(sqrt(x)) for non-negative integers
inline std::int64_t isqrt(std::int64_t x) {
  if (x <= 0) return 0;
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(x)));
  while (r * r > x) --r;
  while ((r + 1) * (r + 1) <= x) ++r;
  return r;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  // b > 0
  return a >= 0 ? (a + b - 1) / b : -((-a) / b);
}

}  // namespace ergosim
