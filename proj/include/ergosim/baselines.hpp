#pragma once

#include <variant>

#include "ergosim/core.hpp"

namespace ergosim {

struct CCom {};
struct SybilControl {
  Seconds test_period_s = 0.5;
};
struct Remp {
  double t_max = 1e7;
};

using BaselineKind = std::variant<CCom, SybilControl, Remp>;

inline Units ccom_entrance_cost() { return 1; }

// One test period: every good member pays one unit; the adversary pays one unit
// per bad member it keeps. Returns the number of bad members kept.
inline std::size_t sybilcontrol_tick(std::size_t good_count, std::size_t bad_wanted, Units adversary_affordable,
                                     CostLedger& ledger) {
  ledger.good_periodic += static_cast<Units>(good_count);
  auto keep = std::min<Units>(static_cast<Units>(bad_wanted), std::max<Units>(0, adversary_affordable));
  ledger.adversary_upkeep += keep;
  return static_cast<std::size_t>(keep);
}

// (1 - kappa) * t_max / kappa; the population term of the closed form cancels
inline double remp_good_spend_rate(double kappa, double t_max) {
  if (!(kappa > 0 && kappa < 1)) throw Error(ErrorCode::ConfigError, "kappa must be in (0, 1)");
  if (!(t_max > 0)) throw Error(ErrorCode::ConfigError, "t_max must be positive");
  return (1.0 - kappa) * t_max / kappa;
}

}  // namespace ergosim
