#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ergosim/adversary.hpp"
#include "ergosim/baselines.hpp"
#include "ergosim/churn.hpp"
#include "ergosim/committee.hpp"
#include "ergosim/core.hpp"
#include "ergosim/ergo.hpp"
#include "ergosim/estimator.hpp"
#include "ergosim/metrics.hpp"

namespace ergosim {

enum class DefenseKind { Ergo, CCom, SybilControl, Remp };

struct DefenseSpec {
  std::string name = "ergo";
  DefenseKind kind = DefenseKind::Ergo;
  DefensePolicy policy;
  Seconds test_period_s = 0.5;
  double t_max = 1e7;

  bool purges() const { return kind == DefenseKind::Ergo || kind == DefenseKind::CCom; }

  // ergo, ergo-ch1, ergo-ch2, ergo-sf98, ergo-sf92, ergo-sf:<p>, ccom,
  // sybilcontrol, remp, remp:<t_max>
  static DefenseSpec parse(const std::string& name) {
    DefenseSpec d;
    d.name = name;
    if (name == "ergo") return d;
    if (name == "ergo-ch1") {
      d.policy = DefensePolicy::ch1();
    } else if (name == "ergo-ch2") {
      d.policy = DefensePolicy::ch2();
    } else if (name == "ergo-sf98") {
      d.policy = DefensePolicy::sf(0.98);
    } else if (name == "ergo-sf92") {
      d.policy = DefensePolicy::sf(0.92);
    } else if (name.rfind("ergo-sf:", 0) == 0) {
      double p = 0;
      if (!detail::parse_double(name.substr(8), p)) throw Error(ErrorCode::ConfigError, "bad accuracy in " + name);
      d.policy = DefensePolicy::sf(p);
    } else if (name == "ccom") {
      d.kind = DefenseKind::CCom;
    } else if (name == "sybilcontrol") {
      d.kind = DefenseKind::SybilControl;
    } else if (name == "remp") {
      d.kind = DefenseKind::Remp;
    } else if (name.rfind("remp:", 0) == 0) {
      d.kind = DefenseKind::Remp;
      if (!detail::parse_double(name.substr(5), d.t_max)) throw Error(ErrorCode::ConfigError, "bad t_max in " + name);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown defense '" + name + "'");
    }
    d.policy.validate();
    return d;
  }
};

enum class Warmup {
  None,
  // membership and GoodJEst run alone until the first interval closes; the
  // defense, adversary and ledgers start then
  FirstInterval,
};

struct RunOptions {
  SimConfig sim;
  DefenseSpec defense;
  AdversaryConfig adversary;
  bool committee = false;
  double committee_C = 32.0;
  Warmup warmup = Warmup::FirstInterval;
  bool record_iterations = false;
  std::size_t max_iteration_records = 1'000'000;
  bool record_good_events = false;
  Seconds sample_period = 100.0;
};

struct IterationRecord {
  std::uint64_t iter = 0;
  Seconds start = 0;
  Seconds end = 0;
  std::size_t size_at_tau = 0;
  std::size_t joins = 0;
  std::size_t departs = 0;
  Units purge_cost = 0;
  Units entrance_cost_good = 0;
  Units entrance_cost_bad = 0;
};

struct Violation {
  Seconds time = 0;
  std::string kind;
  std::string detail;
};

struct RunResult {
  std::string defense;
  double T = 0;
  std::uint64_t seed = 0;
  bool valid = true;
  bool warmup_complete = true;
  Seconds measure_start = 0;
  Seconds measure_end = 0;
  CostLedger ledger;
  SpendRates rates;
  double max_bad_fraction = 0;
  std::optional<Seconds> bad_fraction_cutoff;  // first time the bad fraction reached 1/6
  std::size_t good_joins = 0;
  std::size_t good_departs = 0;
  std::size_t bad_joins = 0;
  std::size_t refused_bad_attempts = 0;
  std::size_t false_refusals = 0;
  std::size_t purges = 0;
  std::size_t suppressed_departures = 0;
  std::size_t staggered_departures = 0;
  double mean_entrance_cost = 0;  // xi
  std::size_t subinterval_checked = 0;
  std::size_t subinterval_violations = 0;
  std::size_t overlap_iterations = 0;
  std::size_t overlap_violations = 0;
  std::size_t overlap_max = 0;
  std::size_t violation_count = 0;
  std::vector<Violation> violations;  // first few of each kind
  std::vector<IntervalRecord> intervals;
  std::vector<RatioSample> estimates;  // one per estimator update, rho filled by analysis
  std::vector<IterationRecord> iterations;
  bool iterations_truncated = false;
  std::vector<CommitteeAudit> committee_audits;
  std::vector<Event> good_events;
  std::vector<Uid> initial_good;

  bool invariant_ok() const { return violation_count == 0; }
};

class Simulation {
 public:
  Simulation(const RunOptions& opt, const ChurnTrace& trace, double T, std::uint64_t seed)
      : opt_(opt),
        trace_(trace),
        T_(T),
        adv_rng_(mix_seed(seed, 1)),
        cls_rng_(mix_seed(seed, 2)),
        com_rng_(mix_seed(seed, 3)),
        ret_rng_(mix_seed(seed, 4)),
        def_(opt.defense.policy, opt.defense.kind == DefenseKind::Ergo ? CostRule::Window : CostRule::Constant) {
    opt_.sim.validate();
    opt_.adversary.validate();
    if (opt_.defense.kind == DefenseKind::Remp)
      throw Error(ErrorCode::ConfigError, "REMP is analytic; it has no simulation");
    res_.defense = opt.defense.name;
    res_.T = T;
    res_.seed = seed;
    purging_ = opt.defense.purges();
    window_ = opt.defense.kind == DefenseKind::Ergo;
    sybil_ = opt.defense.kind == DefenseKind::SybilControl;
    h1_ = window_ && opt.defense.policy.has(H1_align_estimate);
    h4_ = window_ && opt.defense.policy.has(H4_classifier);
    attacking_ = T > 0 && opt.adversary.strategy != Strategy::None;
  }

  RunResult run() {
    setup();
    while (true) {
      Seconds t_tr = next_ev_ < trace_.events.size() ? trace_.events[next_ev_].time : kNever;
      Seconds t_tick = protocol_ && sybil_ ? next_tick_ : kNever;
      Seconds t_adv = protocol_ && attacking_ ? wake_ : kNever;
      Seconds t = std::min({t_tr, t_tick, t_adv});
      if (!(t < kNever) || t > stop_) break;
      if (protocol_) advance_samples(t);
      now_ = t;
      if (t == t_tr) {
        trace_event(trace_.events[next_ev_++]);
      } else if (t == t_tick) {
        tick(t);
      } else {
        adversary_step(t);
      }
    }
    finish();
    return std::move(res_);
  }

 private:
  // ---- setup and phases ----

  void setup() {
    res_.suppressed_departures = trace_.suppressed_departures;
    res_.staggered_departures = trace_.staggered_departures;
    Uid bound = trace_.uid_bound();
    joined_at_.assign(bound, 0.0);
    refused_.assign(bound, 0);
    for (const auto& id : trace_.initial_ids) {
      good_.insert(id.uid);
      joined_at_[id.uid] = -kNever;
      if (opt_.record_good_events) res_.initial_good.push_back(id.uid);
    }
    double f = opt_.adversary.initial_bad_fraction;
    auto initial_bad =
        static_cast<std::size_t>(std::llround(f / (1.0 - f) * static_cast<double>(good_.size())));
    if (opt_.adversary.initial_bad_permanent)
      resident_ = initial_bad;
    else
      bad_[1][1] = initial_bad;
    est_.init(size(), 0.0, opt_.sim.round_len);
    res_.estimates.push_back(RatioSample{0.0, est_.estimate(), 0, 0, 0});
    if (opt_.warmup == Warmup::None) start_protocol(0.0);
  }

  void start_protocol(Seconds t) {
    protocol_ = true;
    res_.measure_start = t;
    stop_ = t + opt_.sim.horizon;
    def_.start(t, size(), kappa_share(opt_.sim.kappa, size()));
    def_.note_estimate(est_.estimate());
    adv_ = AdversaryState(T_, t);
    if (opt_.committee) committee_ = elect_committee_counts(good_, bad_total(), opt_.committee_C, com_rng_, 0);
    if (window_) sub_.open_piece(t, est_.estimate());
    overlap_.iteration_start(t);
    next_tick_ = t + opt_.defense.test_period_s;
    next_sample_ = t + opt_.sample_period;
    audit(t);
    reschedule();
  }

  void finish() {
    res_.warmup_complete = protocol_;
    if (!protocol_) {
      res_.measure_start = res_.measure_end = last_event_;
      return;
    }
    Seconds end = std::isfinite(stop_) ? stop_ : last_event_;
    advance_samples(end);
    res_.measure_end = end;
    sub_.flush();
    if (purging_) overlap_.iteration_end(end);
    res_.subinterval_checked = sub_.checked();
    res_.subinterval_violations = sub_.violations();
    if (sub_.violations() > 0) note_violation(*sub_.first_violation(), "subinterval", "bad joins exceed floor(sqrt(2 T_j))", sub_.violations());
    res_.overlap_iterations = overlap_.iterations();
    res_.overlap_violations = overlap_.violations();
    res_.overlap_max = overlap_.max_seen();
    res_.ledger = ledger_;
    Seconds span = res_.measure_end - res_.measure_start;
    if (span > 0) res_.rates = compute_spend_rates(ledger_, span);
    res_.mean_entrance_cost = res_.good_joins > 0
                                  ? static_cast<double>(ledger_.good_entrance) / static_cast<double>(res_.good_joins)
                                  : 0.0;
  }

  // ---- membership bookkeeping ----

  std::size_t bad_nonresident() const { return bad_[0][0] + bad_[0][1] + bad_[1][0] + bad_[1][1]; }
  std::size_t bad_total() const { return bad_nonresident() + resident_; }
  std::size_t size() const { return good_.size() + bad_total(); }

  Seconds serialize(Seconds t) const { return t > last_event_ ? t : std::nextafter(last_event_, kNever); }

  // keeps `keep` non-resident bad IDs chosen uniformly, evicting the rest
  void retain_bad(std::size_t keep, bool reset_tau) {
    std::size_t s1 = bad_[1][0] + bad_[1][1];
    std::size_t s0 = bad_[0][0] + bad_[0][1];
    std::size_t n = s0 + s1;
    keep = std::min(keep, n);
    std::size_t k1 = keep == n ? s1 : hypergeometric(n, s1, keep, ret_rng_);
    std::size_t k0 = keep - k1;
    if (s1 > k1) est_.on_departure(true, s1 - k1);
    if (s0 > k0) est_.on_departure(false, s0 - k0);
    if (reset_tau) {
      bad_[1][1] = k1;
      bad_[0][1] = k0;
      bad_[1][0] = bad_[0][0] = 0;
    } else {
      bad_[1][0] = k1;
      bad_[0][0] = k0;
      bad_[1][1] = bad_[0][1] = 0;
    }
  }

  // ---- event handlers ----

  void trace_event(const Event& ev) {
    Seconds t = serialize(ev.time);
    Uid u = ev.uid();
    if (ev.is_join()) {
      if (protocol_ && h4_ && !def_.classifier_admits(Kind::Good, cls_rng_)) {
        refused_[u] = 1;
        ++res_.false_refusals;
        return;
      }
      if (protocol_) {
        Units c = sybil_ ? 1 : def_.quote(t, est_.estimate());
        ledger_.good_entrance += c;
        it_entrance_good_ += c;
        if (purging_) def_.record_join(t);
      }
      good_.insert(u);
      joined_at_[u] = t;
      est_.on_join();
      if (protocol_) ++res_.good_joins;
      ++interval_good_joins_;
    } else {
      if (refused_[u]) return;
      if (!good_.erase(u)) throw Error(ErrorCode::TraceError, "departure of absent uid " + std::to_string(u));
      est_.on_departure(est_.in_snapshot(joined_at_[u]));
      if (protocol_ && purging_) def_.record_departure(def_.in_tau_set(joined_at_[u]));
      if (committee_) committee_departure(*committee_, u);
      if (protocol_) ++res_.good_departs;
    }
    if (opt_.record_good_events) res_.good_events.push_back(ev.is_join() ? Event::join(t, u) : Event::depart(t, u));
    after_change(t);
  }

  void bad_joins(Seconds t, std::size_t n, Units cost_each) {
    bad_[0][0] += n;
    est_.on_join(n);
    Units total = cost_each * static_cast<Units>(n);
    ledger_.adversary_entrance += total;
    it_entrance_bad_ += total;
    res_.bad_joins += n;
    if (purging_) {
      if (window_)
        def_.record_join(t);
      else
        def_.record_joins(n);
    }
    if (window_) sub_.record(t, n, total);
  }

  void after_change(Seconds t) {
    last_event_ = t;
    if (!protocol_) {
      if (auto rec = est_.on_membership_change(t, size())) interval_closed(*rec);
      return;
    }
    audit(t);
    bool purged = false;
    if (purging_ && def_.purge_due(t, size(), est_.estimate())) {
      purge(t);
      purged = true;
    }
    if (auto rec = est_.on_membership_change(t, size(), h1_ && !purged)) interval_closed(*rec);
    reschedule();
  }

  void audit(Seconds t) {
    std::size_t b = bad_total(), n = size();
    if (n == 0) return;
    double frac = static_cast<double>(b) / static_cast<double>(n);
    res_.max_bad_fraction = std::max(res_.max_bad_fraction, frac);
    if (6 * b >= n) {
      if (!res_.bad_fraction_cutoff) res_.bad_fraction_cutoff = t;
      if (purging_) note_violation(t, "population", "bad " + std::to_string(b) + " of " + std::to_string(n));
    }
  }

  void purge(Seconds t) {
    const IterationState& it = def_.iteration();
    std::size_t purge_size = size();
    auto good_cost = static_cast<Units>(good_.size());
    ledger_.good_purge += good_cost;
    Units before = adv_.spent();
    std::size_t r = purge_response(adv_, opt_.adversary, purge_size, bad_nonresident(), t);
    Units paid = adv_.spent() - before;
    ledger_.adversary_retention += paid;
    if (window_ && paid > 0) sub_.record(t, 0, paid);
    if (r > kappa_share(opt_.sim.kappa, purge_size)) note_violation(t, "post_purge", "retained above kappa share");
    if (!opt_.defense.policy.has(H2_symmetric_diff_purge) && !opt_.defense.policy.has(H3_invariant_purge) &&
        11 * (it.joins + it.departs - 1) >= it.size_at_tau && it.joins + it.departs > 1)
      note_violation(t, "iteration_threshold", "iteration overran its threshold");
    retain_bad(r, true);

    std::size_t overlap = overlap_.iteration_end(t);
    if (overlap > 2) note_violation(t, "overlap", "iteration overlapped " + std::to_string(overlap) + " intervals");
    if (opt_.record_iterations) {
      if (res_.iterations.size() < opt_.max_iteration_records)
        res_.iterations.push_back(IterationRecord{it.iteration_index, it.tau, t, it.size_at_tau, it.joins, it.departs,
                                                  good_cost, it_entrance_good_, it_entrance_bad_});
      else
        res_.iterations_truncated = true;
    }
    it_entrance_good_ = it_entrance_bad_ = 0;
    ++res_.purges;

    if (committee_) {
      res_.committee_audits.push_back(audit_committee_counts(*committee_, committee_->members.size()));
      res_.committee_audits.back().iteration = it.iteration_index;
      committee_ = elect_committee_counts(good_, bad_total(), opt_.committee_C, com_rng_, it.iteration_index + 1);
    }

    def_.begin_iteration(t, size(), kappa_share(opt_.sim.kappa, purge_size));
    overlap_.iteration_start(t);
    if (h1_) {
      if (auto rec = est_.flush_deferred(t, size())) interval_closed(*rec);
    }
    if (window_) sub_.open_piece(t, est_.estimate());
  }

  void interval_closed(IntervalRecord rec) {
    Seconds t = rec.end;
    rec.true_good_join_rate = static_cast<double>(interval_good_joins_) / (rec.end - rec.start);
    interval_good_joins_ = 0;
    res_.intervals.push_back(rec);
    res_.estimates.push_back(RatioSample{t, rec.estimate_set, 0, 0, rec.interval + 1});
    bad_[1][0] += bad_[0][0];
    bad_[1][1] += bad_[0][1];
    bad_[0][0] = bad_[0][1] = 0;
    def_.note_estimate(est_.estimate());
    if (!protocol_) {
      if (opt_.warmup == Warmup::FirstInterval) start_protocol(t);
      return;
    }
    overlap_.interval_boundary(t);
    if (window_) sub_.open_piece(t, est_.estimate());
  }

  void tick(Seconds t) {
    next_tick_ += opt_.defense.test_period_s;
    double b = adv_.budget(t);
    Units affordable = b > 0 ? static_cast<Units>(std::floor(b)) : 0;
    std::size_t want = bad_nonresident();
    std::size_t keep = sybilcontrol_tick(good_.size(), want, affordable, ledger_);
    adv_.spend(static_cast<Units>(keep));
    if (keep < want) retain_bad(keep, false);
    audit(t);
    if (t > est_.t_last())
      if (auto rec = est_.on_membership_change(t, size())) interval_closed(*rec);
    reschedule();
  }

  // ---- adversary ----

  void adversary_step(Seconds t) {
    if (opt_.adversary.strategy == Strategy::BurstJoin) {
      burst(t);
    } else if (!window_) {
      bulk(t);
    } else {
      steady(t);
    }
  }

  void steady(Seconds t) {
    Seconds te = serialize(t);
    double e = est_.estimate();
    Units c = def_.quote(te, e);
    if (h4_) {
      if (pending_refusals_ < 0) sample_refusals();
      double b = adv_.budget(te);
      auto afford = static_cast<std::int64_t>(std::floor(b / static_cast<double>(c)));
      std::int64_t r = std::min(pending_refusals_, std::max<std::int64_t>(0, afford));
      if (r > 0) {
        Units burned = r * c;
        adv_.spend(burned);
        ledger_.adversary_refused += burned;
        res_.refused_bad_attempts += static_cast<std::size_t>(r);
        pending_refusals_ -= r;
        sub_.record(te, 0, burned);
      }
      if (pending_refusals_ == 0 && adv_.affordable(te, c)) {
        adv_.spend(c);
        pending_refusals_ = -1;
        bad_joins(te, 1, c);
        after_change(te);
        return;
      }
      reschedule(te);
      return;
    }
    if (adv_.affordable(te, c)) {
      adv_.spend(c);
      bad_joins(te, 1, c);
      after_change(te);
      return;
    }
    reschedule(te);
  }

  void sample_refusals() {
    double admit = 1.0 - *opt_.defense.policy.classifier_accuracy;
    if (admit <= 0) {
      pending_refusals_ = std::numeric_limits<std::int64_t>::max() / 4;
      return;
    }
    pending_refusals_ = std::geometric_distribution<std::int64_t>(admit)(adv_rng_);
  }

  // join time of the i-th next join when the adversary pays `step` units per
  // join plus a fixed `offset` before the first
  Seconds bulk_time(double offset, double step, std::size_t i) const {
    return adv_.start() + (static_cast<double>(adv_.spent()) + offset + step * static_cast<double>(i)) / T_;
  }

  std::size_t bulk_count(double offset, double step, Seconds limit) const {
    double x = (T_ * (limit - adv_.start()) - static_cast<double>(adv_.spent()) - offset) / step;
    if (!(x > 0)) return 0;
    auto n = static_cast<std::size_t>(std::max(0.0, std::ceil(x) - 1));
    while (n > 0 && !(bulk_time(offset, step, n) < limit)) --n;
    while (bulk_time(offset, step, n + 1) < limit) ++n;
    return n;
  }

  // Constant-cost defenses: joins are spaced by budget accrual, so runs of
  // them between other events are applied in closed form, split wherever a
  // purge, estimator update, sample or cut-off could happen.
  void bulk(Seconds t) {
    Seconds limit = std::min({next_ev_ < trace_.events.size() ? trace_.events[next_ev_].time : kNever,
                              std::nextafter(stop_, kNever), sybil_ ? next_tick_ : kNever, next_sample_});
    // SybilControl keeps one unit per bad member in reserve for the next test
    auto params = [&]() -> std::pair<double, double> {
      if (sybil_) return {static_cast<double>(bad_nonresident()) - 1.0, 2.0};
      return {0.0, 1.0};
    };
    auto [offset, step] = params();
    std::size_t n = bulk_count(offset, step, limit);
    if (n == 0) {
      reschedule(t);
      return;
    }
    std::size_t k = n;
    if (purging_) k = std::min(k, def_.joins_until_trigger());
    if (!est_.pending()) k = std::min(k, est_.joins_until_due(size()));
    if (!res_.bad_fraction_cutoff) {
      auto need = ceil_div(static_cast<std::int64_t>(good_.size()) - 5 * static_cast<std::int64_t>(bad_total()), 5);
      k = std::min<std::size_t>(k, static_cast<std::size_t>(std::max<std::int64_t>(1, need)));
    }
    Seconds te = serialize(bulk_time(offset, step, k));
    adv_.spend(static_cast<Units>(k));
    bad_joins(te, k, 1);
    after_change(te);
  }

  void burst(Seconds t) {
    auto quote = [&]() { return window_ ? def_.quote(serialize(t), est_.estimate()) : Units{1}; };
    auto submit = [&](Units c) {
      Seconds te = serialize(t);
      if (h4_ && def_.classifier_admits(Kind::Bad, cls_rng_)) {
        bad_joins(te, 1, c);
        after_change(te);
        return true;
      }
      if (h4_) {
        ledger_.adversary_refused += c;
        ++res_.refused_bad_attempts;
        if (window_) sub_.record(te, 0, c);
        return false;
      }
      bad_joins(te, 1, c);
      after_change(te);
      return true;
    };
    accrue_and_act(adv_, opt_.adversary, t, quote, submit);
    reschedule(t);
  }

  // next time the adversary has something to do
  void reschedule(std::optional<Seconds> acted_at = std::nullopt) {
    if (!protocol_ || !attacking_) {
      wake_ = kNever;
      return;
    }
    Seconds from = std::nextafter(last_event_, kNever);
    if (acted_at) from = std::max(from, std::nextafter(*acted_at, kNever));
    if (opt_.adversary.strategy == Strategy::BurstJoin) {
      wake_ = std::max(adv_.next_burst(), from);
      return;
    }
    if (!window_) {
      double need = sybil_ ? static_cast<double>(bad_nonresident()) + 1.0 : 1.0;
      wake_ = adv_.time_affording(need, from);
      return;
    }
    double e = est_.estimate();
    double mult = 1.0;
    if (h4_) {
      if (pending_refusals_ < 0) sample_refusals();
      mult = static_cast<double>(std::min<std::int64_t>(pending_refusals_, 1 << 20) + 1);
    }
    Seconds cur = from;
    while (true) {
      Units c = def_.quote(cur, e);
      Seconds ta = adv_.time_affording(mult * static_cast<double>(c), cur);
      Seconds td = def_.next_quote_drop(cur, e);
      if (ta < td) {
        wake_ = ta;
        return;
      }
      cur = td;
    }
  }

  // ---- reporting ----

  void advance_samples(Seconds t) {
    while (next_sample_ <= t) {
      Units g = ledger_.good_total(), a = ledger_.adversary_total();
      ledger_.samples.push_back(SpendSample{next_sample_, static_cast<double>(g - sample_good_) / opt_.sample_period,
                                            static_cast<double>(a - sample_adv_) / opt_.sample_period});
      sample_good_ = g;
      sample_adv_ = a;
      next_sample_ += opt_.sample_period;
    }
  }

  void note_violation(Seconds t, const std::string& kind, const std::string& detail, std::size_t count = 1) {
    res_.violation_count += count;
    std::size_t same = 0;
    for (const auto& v : res_.violations) same += v.kind == kind ? 1 : 0;
    if (same < 20) res_.violations.push_back(Violation{t, kind, detail});
  }

  const RunOptions opt_;
  const ChurnTrace& trace_;
  const double T_;
  Rng adv_rng_, cls_rng_, com_rng_, ret_rng_;

  bool purging_ = false, window_ = false, sybil_ = false, h1_ = false, h4_ = false, attacking_ = false;
  bool protocol_ = false;

  IdSet good_;
  std::vector<Seconds> joined_at_;
  std::vector<char> refused_;
  // non-resident bad IDs by [in estimator snapshot][in S(tau)]
  std::size_t bad_[2][2] = {{0, 0}, {0, 0}};
  std::size_t resident_ = 0;

  GoodJEst est_;
  ErgoDefense def_;
  AdversaryState adv_;
  std::optional<CommitteeState> committee_;
  CostLedger ledger_;
  SubIntervalMonitor sub_;
  IterationOverlapMonitor overlap_;

  std::size_t next_ev_ = 0;
  Seconds now_ = 0;
  Seconds last_event_ = 0;
  Seconds stop_ = kNever;
  Seconds wake_ = kNever;
  Seconds next_tick_ = kNever;
  Seconds next_sample_ = kNever;
  Units sample_good_ = 0, sample_adv_ = 0;
  std::int64_t pending_refusals_ = -1;
  Units it_entrance_good_ = 0, it_entrance_bad_ = 0;
  std::size_t interval_good_joins_ = 0;

  RunResult res_;
};

inline RunResult run_simulation(const RunOptions& opt, const ChurnTrace& trace, double T, std::uint64_t seed) {
  Simulation s(opt, trace, T, seed);
  return s.run();
}

}  // namespace ergosim
