#pragma once

#include <cmath>

#include "ergosim/adversary.hpp"
#include "ergosim/core.hpp"

namespace ergosim {

inline std::size_t committee_target(std::size_t system_size, double C) {
  if (system_size < 2) return 1;
  auto t = static_cast<std::size_t>(std::ceil(C * std::log2(static_cast<double>(system_size)) - 1e-9));
  return std::max<std::size_t>(1, t);
}

struct CommitteeState {
  IdSet members;
  // bad seats held by IDs the simulator does not track individually
  std::size_t anonymous_bad = 0;
  std::uint64_t elected_at_iteration = 0;
  std::size_t target_size = 1;
  double C = 32.0;

  std::size_t size() const { return members.size() + anonymous_bad; }
};

struct CommitteeAudit {
  std::uint64_t iteration = 0;
  std::size_t size = 0;
  double good_fraction = 0;
  bool size_ok = false;
  bool majority_ok = false;
};

// Uniform sample of target_size members, labels unseen.
inline CommitteeState elect_committee(const SystemView& view, double C, Rng& rng,
                                      std::uint64_t iteration = 0) {
  CommitteeState cs;
  cs.C = C;
  cs.elected_at_iteration = iteration;
  cs.target_size = committee_target(view.size(), C);
  if (view.size() < cs.target_size)
    throw Error(ErrorCode::TooSmall, "system smaller than committee target");
  IdSet all = view.members();
  for (Uid u : sample_without_replacement(all, cs.target_size, rng)) cs.members.insert(u);
  return cs;
}

// Same distribution as elect_committee when the bad IDs are held as a count:
// the number of bad seats is hypergeometric and the good seats are uniform.
inline CommitteeState elect_committee_counts(const IdSet& good, std::size_t bad_count, double C, Rng& rng,
                                             std::uint64_t iteration = 0) {
  CommitteeState cs;
  cs.C = C;
  cs.elected_at_iteration = iteration;
  std::size_t n = good.size() + bad_count;
  cs.target_size = committee_target(n, C);
  if (n < cs.target_size) throw Error(ErrorCode::TooSmall, "system smaller than committee target");
  cs.anonymous_bad = hypergeometric(n, bad_count, cs.target_size, rng);
  for (Uid u : sample_without_replacement(good, cs.target_size - cs.anonymous_bad, rng)) cs.members.insert(u);
  return cs;
}

inline void committee_departure(CommitteeState& cs, Uid departed) { cs.members.erase(departed); }

inline CommitteeAudit audit_committee_counts(const CommitteeState& cs, std::size_t good_seats) {
  CommitteeAudit a;
  a.iteration = cs.elected_at_iteration;
  a.size = cs.size();
  a.good_fraction = a.size == 0 ? 0.0 : static_cast<double>(good_seats) / static_cast<double>(a.size);
  a.size_ok = a.size > 0 && 9 * a.size >= 7 * cs.target_size && a.size <= cs.target_size;
  a.majority_ok = a.size > 0 && 8 * good_seats >= 7 * a.size;
  return a;
}

inline CommitteeAudit audit_committee(const CommitteeState& cs, const SystemView& view) {
  std::size_t good = 0;
  for (Uid u : cs.members) good += view.good_members.contains(u) ? 1 : 0;
  return audit_committee_counts(cs, good);
}

}  // namespace ergosim
