#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "partaa/core.hpp"
#include "partaa/isa.hpp"

namespace partaa {

class AnalysisError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct TaskSpec {
  std::string name;
  Cycles wcet = 1;  // standalone, non-partitioned
  unsigned processor = 1;
  unsigned partition = 1;
  Cycles release_offset = 0;  // from the partition window start
};

struct PartitionTiming {
  Cycles budget = 1;
  Cycles period = 1;
  Cycles switch_overhead = 0;
};

inline Cycles ceil_div(Cycles a, Cycles b) noexcept { return (a + b - 1) / b; }

/// Completion time of a task released at its window start when the
/// partition gets `budget` cycles out of every `period`.
inline Cycles partitioned_wcet(Cycles task, Cycles budget, Cycles period) {
  if (task < 1) throw AnalysisError("task WCET must be at least 1 cycle");
  if (budget < 1 || budget > period) throw AnalysisError("partition budget must satisfy 1 <= budget <= period");
  const Cycles full_windows = ceil_div(task, budget) - 1;
  return full_windows * period + (task - full_windows * budget);
}

inline Cycles partitioned_wcet(Cycles task, const PartitionTiming& t) { return partitioned_wcet(task, t.budget, t.period); }

/// Tasks sharing a partition keep their standalone WCETs when the budget
/// strictly exceeds their sum.
inline bool shared_partition_preserves_wcet(std::span<const Cycles> tasks, Cycles budget) {
  return budget > std::accumulate(tasks.begin(), tasks.end(), Cycles{0});
}

/// Case 1: dependent tasks run back to back in one partition.
inline Cycles wcet_case1(std::span<const Cycles> tasks, Cycles budget) {
  if (tasks.empty()) throw AnalysisError("case 1 needs at least one task");
  const Cycles sum = std::accumulate(tasks.begin(), tasks.end(), Cycles{0});
  if (sum > budget) {
    throw AnalysisError("tasks need " + std::to_string(sum) + " cycles, partition budget is " + std::to_string(budget));
  }
  return sum;
}

/// Case 2: a in the first partition from offset release_a, b in the partition
/// that immediately follows it, released at release_b into its window.
inline Cycles wcet_case2(Cycles budget_first, Cycles release_a, Cycles release_b, Cycles wcet_b,
                         Cycles switch_overhead) {
  if (release_a > budget_first) throw AnalysisError("release offset of a exceeds its partition budget");
  return (budget_first - release_a) + (release_b + wcet_b) + switch_overhead;
}

/// Case 2 against a concrete schedule; rejects partitions that are not
/// adjacent (second window starting exactly switch_overhead after the first).
inline Cycles wcet_case2(const PartitionSchedule& schedule, unsigned first, unsigned second, Cycles release_a,
                         Cycles release_b, Cycles wcet_b) {
  auto find = [&](unsigned p) -> const Window& {
    auto it = std::find_if(schedule.windows.begin(), schedule.windows.end(),
                           [p](const Window& w) { return w.partition == p; });
    if (it == schedule.windows.end()) throw AnalysisError("partition " + std::to_string(p) + " has no window");
    return *it;
  };
  const Window& a = find(first);
  const Window& b = find(second);
  if ((a.end() + schedule.switch_overhead) % schedule.period != b.start % schedule.period) {
    throw AnalysisError("case 2 requires partition " + std::to_string(second) + " to follow partition " +
                        std::to_string(first) + " directly");
  }
  if (release_b + wcet_b > b.duration) throw AnalysisError("task b does not fit its window");
  return wcet_case2(a.duration, release_a, release_b, wcet_b, schedule.switch_overhead);
}

struct ConsumerBudgets {
  Cycles p1 = 0, p2 = 0, p3 = 0;
};

/// Case 3: a and b on different processors. Synchronised partitions add the
/// end-to-end communication delay; unsynchronised ones add a full round of
/// the consumer processor's three partition budgets.
inline Cycles wcet_case3(Cycles wcet_a, Cycles wcet_b, std::optional<Cycles> comm_delay,
                         std::optional<ConsumerBudgets> budgets, bool synchronized) {
  if (synchronized) {
    if (!comm_delay) throw AnalysisError("synchronised case 3 needs the communication delay");
    return wcet_a + *comm_delay + wcet_b;
  }
  if (!budgets) throw AnalysisError("unsynchronised case 3 needs the consumer's partition budgets");
  return wcet_a + budgets->p1 + budgets->p2 + budgets->p3 + wcet_b - 1;
}

inline ConsumerBudgets budgets_of(const PartitionSchedule& schedule) {
  ConsumerBudgets b;
  for (const auto& w : schedule.windows) {
    if (w.partition == 1) b.p1 += w.duration;
    if (w.partition == 2) b.p2 += w.duration;
    if (w.partition == 3) b.p3 += w.duration;
  }
  return b;
}

/// Worst-case hub latency of a channel owning `s_channel` of `s_total` slots.
inline Cycles channel_latency(std::uint64_t s_total, std::uint64_t s_channel, Cycles t_slot) {
  if (s_channel < 1 || s_channel > s_total) throw AnalysisError("need 1 <= S_channel <= S_total");
  if (t_slot < 1) throw AnalysisError("t_slot must be at least 1");
  return ((s_total - 1) / s_channel + 1) * t_slot + 1;
}

inline Cycles end_to_end_bound(std::uint64_t s_total, std::uint64_t s_channel, Cycles t_slot) {
  return 8 + channel_latency(s_total, s_channel, t_slot) + 8;
}

enum class ScheduleRule { periodic, uniform_priority, time_triggered };

inline std::string_view to_string(ScheduleRule r) noexcept {
  switch (r) {
    case ScheduleRule::periodic: return "aperiodic";
    case ScheduleRule::uniform_priority: return "contention";
    case ScheduleRule::time_triggered: return "not-time-triggered";
  }
  return "?";
}

struct ScheduleViolation {
  ScheduleRule rule;
  std::string message;
};

struct ScheduleReport {
  std::vector<ScheduleViolation> violations;

  bool ok() const noexcept { return violations.empty(); }
  bool violates(ScheduleRule r) const noexcept {
    return std::any_of(violations.begin(), violations.end(), [r](const auto& v) { return v.rule == r; });
  }
};

/// Checks the three SwCU assumptions:
///   periodic         every window lies inside one period
///   uniform priority no two windows overlap, so partitions never compete
///   time-triggered   every window has a fixed non-zero length and every
///                    switch leaves at least switch_overhead idle cycles
inline ScheduleReport validate_schedule(const PartitionSchedule& schedule) {
  ScheduleReport report;
  auto add = [&](ScheduleRule r, std::string m) { report.violations.push_back({r, std::move(m)}); };
  if (schedule.period == 0) {
    add(ScheduleRule::periodic, "period must be positive");
    return report;
  }
  if (schedule.windows.empty()) add(ScheduleRule::periodic, "schedule has no windows");

  std::vector<Window> w = schedule.windows;
  std::stable_sort(w.begin(), w.end(), [](const Window& a, const Window& b) { return a.start < b.start; });
  for (const auto& win : w) {
    const std::string name = "window of partition " + std::to_string(win.partition) + " at " + std::to_string(win.start);
    if (win.partition < 1 || win.partition > kPartitionCount) {
      add(ScheduleRule::uniform_priority, name + ": partition id must be 1..3");
    }
    if (win.duration == 0) add(ScheduleRule::time_triggered, name + ": zero-length window has no switch time");
    if (win.end() > schedule.period) {
      add(ScheduleRule::periodic, name + ": ends at " + std::to_string(win.end()) + " beyond period " +
                                      std::to_string(schedule.period));
    }
  }
  for (std::size_t i = 0; i + 1 < w.size(); ++i) {
    if (w[i + 1].start < w[i].end()) {
      add(ScheduleRule::uniform_priority, "partitions " + std::to_string(w[i].partition) + " and " +
                                              std::to_string(w[i + 1].partition) + " overlap at cycle " +
                                              std::to_string(w[i + 1].start));
    }
  }
  if (report.violates(ScheduleRule::uniform_priority) || report.violates(ScheduleRule::periodic)) return report;

  for (std::size_t i = 0; i < w.size(); ++i) {
    const Window& cur = w[i];
    const Window& next = w[(i + 1) % w.size()];
    if (cur.partition == next.partition) continue;
    const Cycles next_start = i + 1 < w.size() ? next.start : next.start + schedule.period;
    const Cycles gap = next_start - cur.end();
    if (gap < schedule.switch_overhead) {
      add(ScheduleRule::time_triggered, "switch " + std::to_string(cur.partition) + "->" +
                                            std::to_string(next.partition) + " at cycle " + std::to_string(cur.end()) +
                                            " leaves " + std::to_string(gap) + " cycles, switch overhead is " +
                                            std::to_string(schedule.switch_overhead));
    }
  }
  return report;
}

}  // namespace partaa
