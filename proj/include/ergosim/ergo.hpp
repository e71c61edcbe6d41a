#pragma once

#include <optional>
#include <vector>

#include "ergosim/adversary.hpp"
#include "ergosim/core.hpp"

namespace ergosim {

enum Heuristic : unsigned {
  H1_align_estimate = 1u << 0,
  H2_symmetric_diff_purge = 1u << 1,
  H3_invariant_purge = 1u << 2,
  H4_classifier = 1u << 3,
};

struct DefensePolicy {
  unsigned heuristics = 0;
  std::optional<double> classifier_accuracy;
  bool window_truncate_at_iteration = true;

  bool has(Heuristic h) const { return (heuristics & h) != 0; }

  void validate() const {
    if (has(H4_classifier) != classifier_accuracy.has_value())
      throw Error(ErrorCode::ConfigError, "classifier accuracy must be set exactly when H4 is enabled");
    if (classifier_accuracy && !(*classifier_accuracy >= 0.5 && *classifier_accuracy <= 1.0))
      throw Error(ErrorCode::ConfigError, "classifier accuracy must be in [0.5, 1]");
  }

  static DefensePolicy ergo() { return {}; }
  static DefensePolicy ch1() { return {H1_align_estimate | H2_symmetric_diff_purge, std::nullopt, true}; }
  static DefensePolicy ch2() {
    return {H1_align_estimate | H2_symmetric_diff_purge | H3_invariant_purge, std::nullopt, true};
  }
  static DefensePolicy sf(double accuracy) {
    return {H1_align_estimate | H2_symmetric_diff_purge | H3_invariant_purge | H4_classifier, accuracy, true};
  }
};

struct IterationState {
  Seconds tau = 0;
  std::size_t size_at_tau = 0;
  std::size_t joins = 0;
  std::size_t departs = 0;
  // admitted join times, ascending; entries from earlier iterations are kept
  // only when the window is not truncated at tau
  std::vector<Seconds> join_log;
  std::uint64_t iteration_index = 0;
};

namespace detail {

inline Seconds window_floor(const IterationState& it, Seconds now, double estimate, bool truncate) {
  Seconds lo = now - 1.0 / estimate;
  return truncate ? std::max(lo, it.tau) : lo;
}

// joins in (lo, now)
inline std::size_t window_count(const std::vector<Seconds>& log, std::size_t head, Seconds lo, Seconds now) {
  auto b = std::upper_bound(log.begin() + static_cast<std::ptrdiff_t>(head), log.end(), lo);
  auto e = std::lower_bound(b, log.end(), now);
  return static_cast<std::size_t>(e - b);
}

}  // namespace detail

// 1 + joins in (now - 1/estimate, now), clipped at tau when truncating
inline Units entrance_cost(const IterationState& it, Seconds now, double estimate, bool truncate = true) {
  if (!(estimate > 0)) throw Error(ErrorCode::BadEstimate, "estimate must be positive");
  Seconds lo = detail::window_floor(it, now, estimate, truncate);
  return 1 + static_cast<Units>(detail::window_count(it.join_log, 0, lo, now));
}

// Step 2 trigger: joins + departs >= ceil(size_at_tau / 11)
inline bool iteration_threshold_reached(std::size_t events, std::size_t size_at_tau) {
  return 11 * events >= size_at_tau;
}

// H3: upper bound on bad joins this iteration from the estimated good join rate
inline std::size_t h3_bad_join_bound(std::size_t joins, Seconds elapsed, double estimate) {
  double b = std::ceil(static_cast<double>(joins) - elapsed * estimate);
  if (!(b > 0)) return 0;
  return std::min(joins, static_cast<std::size_t>(b));
}

// H3 keeps the iteration open while even one more bad join leaves the
// worst-case bad fraction below 1/6
inline bool h3_suppresses(std::size_t worst_bad, std::size_t size_now) {
  return 6 * (worst_bad + 1) < size_now;
}

enum class CostRule { Window, Constant };

struct PurgeOutcome {
  Seconds time = 0;
  std::vector<Uid> survivors;  // filled by the set-based API only
  Units good_cost = 0;
  std::size_t adversary_retained = 0;
};

// ERGO admission and purge state for one run. Membership itself lives with the
// caller; departures report whether the ID was in S(tau).
class ErgoDefense {
 public:
  explicit ErgoDefense(DefensePolicy policy = {}, CostRule rule = CostRule::Window)
      : policy_(policy), rule_(rule) {
    policy_.validate();
  }

  const DefensePolicy& policy() const { return policy_; }
  const IterationState& iteration() const { return it_; }
  CostRule rule() const { return rule_; }

  // opens iteration 0; `retained_bound` is the worst-case bad count carried in
  void start(Seconds now, std::size_t size, std::size_t retained_bound) {
    it_ = IterationState{};
    head_ = 0;
    begin(now, size, retained_bound);
    it_.iteration_index = 0;
  }

  void begin_iteration(Seconds now, std::size_t size, std::size_t retained_bound) {
    auto next = it_.iteration_index + 1;
    begin(now, size, retained_bound);
    it_.iteration_index = next;
  }

  Units quote(Seconds now, double estimate) const {
    if (rule_ == CostRule::Constant) return 1;
    if (!(estimate > 0)) throw Error(ErrorCode::BadEstimate, "estimate must be positive");
    Seconds lo = detail::window_floor(it_, now, estimate, policy_.window_truncate_at_iteration);
    return 1 + static_cast<Units>(detail::window_count(it_.join_log, head_, lo, now));
  }

  // time at which the quote next drops as a windowed join ages out
  Seconds next_quote_drop(Seconds now, double estimate) const {
    if (rule_ == CostRule::Constant) return kNever;
    Seconds lo = detail::window_floor(it_, now, estimate, policy_.window_truncate_at_iteration);
    auto b = std::upper_bound(it_.join_log.begin() + static_cast<std::ptrdiff_t>(head_), it_.join_log.end(), lo);
    if (b == it_.join_log.end() || !(*b < now)) return kNever;
    Seconds t = *b + 1.0 / estimate;
    while (!(t - 1.0 / estimate >= *b)) t = std::nextafter(t, kNever);
    return std::max(t, std::nextafter(now, kNever));
  }

  // H4: true when the classifier lets the ID in
  bool classifier_admits(Kind kind, Rng& rng) const {
    if (!policy_.has(H4_classifier)) return true;
    bool correct = std::bernoulli_distribution(*policy_.classifier_accuracy)(rng);
    return kind == Kind::Good ? correct : !correct;
  }

  void record_join(Seconds now) {
    ++it_.joins;
    ++added_tau_;
    if (rule_ == CostRule::Constant) return;
    it_.join_log.push_back(now);
    if (!policy_.window_truncate_at_iteration) trim(now);
  }

  // n admitted joins at once; only meaningful under the constant cost rule
  void record_joins(std::size_t n) {
    it_.joins += n;
    added_tau_ += n;
  }

  void record_departure(bool was_in_tau_set) {
    ++it_.departs;
    if (was_in_tau_set)
      ++removed_tau_;
    else
      --added_tau_;
  }

  bool in_tau_set(Seconds joined_at) const { return joined_at <= it_.tau; }
  std::size_t sym_diff_since_tau() const { return added_tau_ + removed_tau_; }

  bool trigger_reached() const {
    std::size_t ev = policy_.has(H2_symmetric_diff_purge) ? sym_diff_since_tau() : it_.joins + it_.departs;
    return iteration_threshold_reached(ev, it_.size_at_tau);
  }

  std::size_t worst_case_bad(Seconds now, double estimate) const {
    return retained_bound_ + h3_bad_join_bound(it_.joins, now - it_.tau, estimate);
  }

  bool suppressed(Seconds now, std::size_t size_now, double estimate) const {
    return policy_.has(H3_invariant_purge) && h3_suppresses(worst_case_bad(now, estimate), size_now);
  }

  bool purge_due(Seconds now, std::size_t size_now, double estimate) const {
    return trigger_reached() && !suppressed(now, size_now, estimate);
  }

  // additional joins (no departures) before the trigger predicate holds
  std::size_t joins_until_trigger() const {
    std::size_t ev = policy_.has(H2_symmetric_diff_purge) ? sym_diff_since_tau() : it_.joins + it_.departs;
    auto need = ceil_div(static_cast<std::int64_t>(it_.size_at_tau), 11) - static_cast<std::int64_t>(ev);
    return static_cast<std::size_t>(std::max<std::int64_t>(1, need));
  }

  // widest window seen so far; bounds what trim() may discard
  void note_estimate(double estimate) {
    if (estimate > 0) trim_window_ = std::max(trim_window_, 1.0 / estimate);
  }

 private:
  void begin(Seconds now, std::size_t size, std::size_t retained_bound) {
    it_.tau = now;
    it_.size_at_tau = size;
    it_.joins = 0;
    it_.departs = 0;
    if (policy_.window_truncate_at_iteration) {
      it_.join_log.clear();
      head_ = 0;
    }
    added_tau_ = 0;
    removed_tau_ = 0;
    retained_bound_ = retained_bound;
  }

  // drops joins older than any window the current estimate could use
  void trim(Seconds now) {
    if (it_.join_log.size() < 4096) return;
    Seconds keep = now - trim_window_;
    while (head_ < it_.join_log.size() && it_.join_log[head_] <= keep) ++head_;
    if (head_ > it_.join_log.size() / 2) {
      it_.join_log.erase(it_.join_log.begin(), it_.join_log.begin() + static_cast<std::ptrdiff_t>(head_));
      head_ = 0;
    }
  }

  DefensePolicy policy_;
  CostRule rule_;
  IterationState it_;
  std::size_t head_ = 0;
  std::size_t added_tau_ = 0;
  std::size_t removed_tau_ = 0;
  std::size_t retained_bound_ = 0;
  Seconds trim_window_ = 0;
};

struct AdmitResult {
  bool admitted = false;
  Units cost_charged = 0;
};

// Set-based admission of one identity at identity.joined_at.
inline AdmitResult admit(ErgoDefense& d, SystemView& view, const Identity& id, double estimate,
                         CostLedger& ledger, Rng& rng) {
  if (view.contains(id.uid)) throw Error(ErrorCode::DuplicateId, "uid " + std::to_string(id.uid));
  if (!d.classifier_admits(id.kind, rng)) return {false, 0};
  Units c = d.quote(id.joined_at, estimate);
  view.apply(Event{id.joined_at, Join{id}});
  d.record_join(id.joined_at);
  (id.kind == Kind::Good ? ledger.good_entrance : ledger.adversary_entrance) += c;
  return {true, c};
}

// Set-based departure; keeps the defense's S(tau) bookkeeping in step.
inline void observe_departure(ErgoDefense& d, SystemView& view, Seconds t, Uid u) {
  view.apply(Event::depart(t, u));
  d.record_departure(d.in_tau_set(view.joined_at(u)));
}

// Set-based purge check: when due, charges every good member one unit, lets the
// adversary retain what it can afford, evicts the other bad IDs and opens a new
// iteration.
inline std::optional<PurgeOutcome> maybe_purge(ErgoDefense& d, SystemView& view, CostLedger& ledger,
                                               AdversaryState& adv, const AdversaryConfig& acfg,
                                               double estimate, Rng& rng) {
  if (!d.purge_due(view.now, view.size(), estimate)) return std::nullopt;
  PurgeOutcome out;
  out.time = view.now;
  std::size_t purge_size = view.size();
  out.good_cost = static_cast<Units>(view.good_members.size());
  ledger.good_purge += out.good_cost;
  Units before = adv.spent();
  std::size_t r = purge_response(adv, acfg, purge_size, view.bad_members.size(), view.now);
  ledger.adversary_retention += adv.spent() - before;
  auto kept = sample_without_replacement(view.bad_members, r, rng);
  IdSet keep;
  for (Uid u : kept) keep.insert(u);
  std::vector<Uid> evict;
  for (Uid u : view.bad_members)
    if (!keep.contains(u)) evict.push_back(u);
  for (Uid u : evict) view.bad_members.erase(u);
  out.adversary_retained = r;
  out.survivors = view.members().sorted();
  d.begin_iteration(view.now, view.size(), kappa_share(acfg.kappa, purge_size));
  return out;
}

}  // namespace ergosim
