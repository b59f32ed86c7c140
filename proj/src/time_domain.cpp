#include "pmcbs/time_domain.hpp"

#include <algorithm>
#include <stdexcept>

namespace pmcbs {

std::vector<Interval> merge_constraints(std::vector<Interval> v) {
  std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) {
    return a.start < b.start || (a.start == b.start && a.end < b.end);
  });
  std::vector<Interval> out;
  for (const Interval& iv : v) {
    if (!out.empty() && iv.start <= out.back().end)
      out.back().end = std::max(out.back().end, iv.end);
    else
      out.push_back(iv);
  }
  return out;
}

std::vector<Interval> time_slots(const std::vector<Interval>& merged) {
  std::vector<Interval> slots;
  double prev = 0.0;
  for (const Interval& iv : merged) {
    if (iv.start > prev) slots.push_back({prev, iv.start});
    prev = iv.end;
  }
  if (prev < kInf) slots.push_back({prev, kInf});
  return slots;
}

void ConstraintSet::add(int agent, const IntervalConstraint& c) {
  if (!(c.start >= 0.0) || !(c.start < c.end))
    throw std::invalid_argument("constraint interval must satisfy 0 <= start < end");
  auto& list = by_agent_[agent][c.region];
  list.push_back({c.start, c.end});
  list = merge_constraints(std::move(list));
  ++total_added_;
}

const std::vector<Interval>* ConstraintSet::find(int agent, int region) const {
  auto a = by_agent_.find(agent);
  if (a == by_agent_.end()) return nullptr;
  auto r = a->second.find(region);
  return r == a->second.end() ? nullptr : &r->second;
}

const std::map<int, std::vector<Interval>>* ConstraintSet::for_agent(int agent) const {
  auto a = by_agent_.find(agent);
  return a == by_agent_.end() ? nullptr : &a->second;
}

}  // namespace pmcbs
