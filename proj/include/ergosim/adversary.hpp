#pragma once

#include <unordered_set>
#include <vector>

#include "ergosim/core.hpp"

namespace ergosim {

enum class Strategy { SteadyJoin, BurstJoin, None };

struct AdversaryConfig {
  double spend_rate_T = 0.0;
  Strategy strategy = Strategy::SteadyJoin;
  Seconds burst_period_s = 10.0;
  bool respond_to_purges = false;
  double kappa = 1.0 / 18.0;
  // bad share of the initial population
  double initial_bad_fraction = 0.0;
  // initial bad IDs are a standing population that always passes purges, free
  bool initial_bad_permanent = false;

  void validate() const {
    if (!(spend_rate_T >= 0)) throw Error(ErrorCode::ConfigError, "spend rate must be non-negative");
    if (strategy == Strategy::BurstJoin && !(burst_period_s > 0))
      throw Error(ErrorCode::ConfigError, "burst period must be positive");
    if (!(initial_bad_fraction >= 0) || !(initial_bad_fraction < 1))
      throw Error(ErrorCode::ConfigError, "initial bad fraction must be in [0, 1)");
  }
};

// floor(kappa * n), robust to kappa = 1/18 not being exact in binary
inline std::size_t kappa_share(double kappa, std::size_t n) {
  return static_cast<std::size_t>(std::floor(kappa * static_cast<double>(n) * (1.0 + 1e-12)));
}

// Budget is T·(now - start) - spent; it is never stored, so conservation is exact.
class AdversaryState {
 public:
  AdversaryState() = default;
  AdversaryState(double rate, Seconds start) : rate_(rate), start_(start), next_burst_(start) {}

  double rate() const { return rate_; }
  Seconds start() const { return start_; }
  Units spent() const { return spent_; }
  double budget(Seconds now) const { return rate_ * (now - start_) - static_cast<double>(spent_); }
  bool affordable(Seconds now, Units cost) const { return budget(now) >= static_cast<double>(cost); }

  void spend(Units u) { spent_ += u; }

  // earliest time at which budget(t) >= amount (no earlier than `from`)
  Seconds time_affording(double amount, Seconds from) const {
    if (rate_ <= 0) return budget(from) >= amount ? from : kNever;
    Seconds t = start_ + (static_cast<double>(spent_) + amount) / rate_;
    if (!(t > from)) return from;
    while (budget(t) < amount) t = std::nextafter(t, kNever);
    return t;
  }

  Seconds next_burst() const { return next_burst_; }
  void schedule_next_burst(Seconds period, Seconds now) {
    while (next_burst_ <= now) next_burst_ += period;
  }

 private:
  double rate_ = 0.0;
  Seconds start_ = 0.0;
  Units spent_ = 0;
  Seconds next_burst_ = 0.0;
};

struct Submission {
  bool admitted = false;
  Units cost = 0;
};

// Spends the accrued budget on bad joins at `now`. `quote()` returns the current
// entrance cost; `submit(cost)` hands one join attempt to the defense and
// reports whether it was admitted. An attempt burns the quoted cost either way.
template <class Quote, class Submit>
std::vector<Submission> accrue_and_act(AdversaryState& st, const AdversaryConfig& cfg, Seconds now,
                                       Quote&& quote, Submit&& submit) {
  std::vector<Submission> out;
  if (cfg.strategy == Strategy::None || st.rate() <= 0) return out;
  if (cfg.strategy == Strategy::BurstJoin) {
    if (now < st.next_burst()) return out;
    st.schedule_next_burst(cfg.burst_period_s, now);
  }
  while (true) {
    Units c = quote();
    if (!st.affordable(now, c)) break;
    st.spend(c);
    bool ok = submit(c);
    out.push_back(Submission{ok, c});
  }
  return out;
}

// Number of bad IDs the adversary carries through a purge: at most
// floor(kappa * purge_size), one unit each, limited by budget.
inline std::size_t purge_response(AdversaryState& st, const AdversaryConfig& cfg, std::size_t purge_size,
                                  std::size_t bad_alive, Seconds now) {
  if (!cfg.respond_to_purges || bad_alive == 0) return 0;
  std::size_t r = std::min(bad_alive, kappa_share(cfg.kappa, purge_size));
  double b = st.budget(now);
  if (b < static_cast<double>(r)) r = b > 0 ? static_cast<std::size_t>(std::floor(b)) : 0;
  st.spend(static_cast<Units>(r));
  return r;
}

// Number of successes in `draws` draws without replacement from `total` items,
// `marked` of them marked. Uses the symmetries of the distribution so the loop
// runs min(draws, marked, and their complements) times.
inline std::size_t hypergeometric(std::size_t total, std::size_t marked, std::size_t draws, Rng& rng) {
  marked = std::min(marked, total);
  draws = std::min(draws, total);
  if (marked > draws) std::swap(marked, draws);
  bool flip = draws > total - draws;
  std::size_t n = flip ? total - draws : draws;
  std::size_t hits = 0, left = marked, pool = total;
  for (std::size_t i = 0; i < n && left > 0; ++i, --pool) {
    if (std::uniform_int_distribution<std::size_t>(0, pool - 1)(rng) < left) {
      ++hits;
      --left;
    }
  }
  // hits counted among the undrawn items when flipped
  return flip ? marked - hits : hits;
}

// uniform choice of `k` uids from a set, without replacement (Floyd's method)
inline std::vector<Uid> sample_without_replacement(const IdSet& from, std::size_t k, Rng& rng) {
  const std::size_t n = from.size();
  k = std::min(k, n);
  std::vector<Uid> out;
  out.reserve(k);
  std::unordered_set<std::size_t> taken;
  for (std::size_t j = n - k; j < n; ++j) {
    std::size_t i = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    if (!taken.insert(i).second) {
      taken.insert(j);
      i = j;
    }
    out.push_back(from.at(i));
  }
  return out;
}

}  // namespace ergosim
