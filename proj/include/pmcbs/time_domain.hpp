#pragma once

#include <limits>
#include <map>
#include <vector>

namespace pmcbs {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Half-algebra of time intervals used throughout the solver. Constraint
// intervals are closed [start, end]; free slots are open (start, end).
// Both are stored as the same struct; the distinction lives in the
// overlap predicate, which is strict so that touching intervals do not
// conflict (an agent may enter a region exactly when another leaves, or
// exactly when a constraint expires).
struct Interval {
  double start = 0.0;
  double end = 0.0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline bool overlaps(const Interval& a, const Interval& b) {
  return std::max(a.start, b.start) < std::min(a.end, b.end);
}

// Sort and merge into a disjoint ascending list. Overlapping and touching
// inputs merge ([1,2] + [2,3] -> [1,3]). Idempotent.
std::vector<Interval> merge_constraints(std::vector<Interval> v);

// Complement of a merged constraint list within (0, inf): the time slots
// during which a region is available. With no constraint starting at 0 the
// result has exactly one more element than the input; a leading constraint
// at 0 or a trailing unbounded constraint drops the corresponding slot.
std::vector<Interval> time_slots(const std::vector<Interval>& merged);

// One forbidden interval on one region for one agent. end may be kInf
// (an agent parked on its goal blocks the region forever).
struct IntervalConstraint {
  int region = -1;
  double start = 0.0;
  double end = 0.0;
};

// Per-agent, per-region merged constraint intervals.
class ConstraintSet {
 public:
  // Validates start >= 0 and start < end, then merges into the agent's
  // list for the region. Throws std::invalid_argument on a bad interval.
  void add(int agent, const IntervalConstraint& c);

  // Merged intervals for (agent, region); nullptr when unconstrained.
  const std::vector<Interval>* find(int agent, int region) const;

  // All constrained regions of one agent; nullptr when the agent has none.
  const std::map<int, std::vector<Interval>>* for_agent(int agent) const;

  // Number of add() calls, i.e. raw constraint count before merging.
  int total_added() const { return total_added_; }

 private:
  std::map<int, std::map<int, std::vector<Interval>>> by_agent_;
  int total_added_ = 0;
};

}  // namespace pmcbs
