#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "flowsched/errors.hpp"
#include "flowsched/instance.hpp"
#include "flowsched/schedule.hpp"

namespace flowsched {

// Ground truth by enumeration: every job-to-machine assignment, with the
// per-machine policy that is exactly optimal for the metric (shortest
// remaining work for total flow, first-in-first-out for maximum flow).

struct OracleResult {
    long value = 0;
    std::vector<int> machine_of;  // per job index
    Schedule schedule;
};

constexpr int kDefaultOracleCap = 7;

namespace detail {

template <typename Metric>
OracleResult enumerate_assignments(const Instance& inst, Policy policy, Metric metric, int cap) {
    validate_instance(inst);
    const int n = inst.num_jobs();
    if (n > cap)
        throw CapError("instance has " + std::to_string(n) + " jobs; oracle cap is " +
                       std::to_string(cap));
    std::vector<std::vector<int>> options(n);
    double log_space = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < inst.machines; ++i)
            if (inst.jobs[j].eligible(i)) options[j].push_back(i);
        log_space += std::log2(static_cast<double>(options[j].size()));
    }
    if (log_space > 20) throw CapError("assignment space too large for the oracle");

    std::vector<int> cursor(n, 0);
    std::vector<int> best_assignment;
    long best_value = 0;
    bool first = true;
    while (true) {
        std::vector<Placement> placements;
        for (int j = 0; j < n; ++j)
            placements.push_back({j, options[j][cursor[j]], inst.jobs[j].release});
        Schedule s = assemble_schedule(inst, placements, policy);
        long value = metric(s);
        if (first || value < best_value) {
            first = false;
            best_value = value;
            best_assignment.clear();
            for (int j = 0; j < n; ++j) best_assignment.push_back(options[j][cursor[j]]);
        }
        int pos = n - 1;
        while (pos >= 0 && cursor[pos] + 1 == static_cast<int>(options[pos].size())) {
            cursor[pos] = 0;
            --pos;
        }
        if (pos < 0) break;
        ++cursor[pos];
    }

    OracleResult out;
    out.value = best_value;
    out.machine_of = best_assignment;
    std::vector<Placement> placements;
    for (int j = 0; j < n; ++j) placements.push_back({j, best_assignment[j], inst.jobs[j].release});
    out.schedule = assemble_schedule(inst, placements, policy);
    require(validate(out.schedule, inst).empty(), "oracle witness fails validation");
    return out;
}

}  // namespace detail

// Exact minimum total flow-time over non-migratory preemptive schedules.
inline OracleResult oracle_total(const Instance& inst, int cap = kDefaultOracleCap) {
    return detail::enumerate_assignments(
        inst, Policy::Srpt, [](const Schedule& s) { return metrics(s).total_flow; }, cap);
}

// Exact minimum of the maximum flow-time.
inline OracleResult oracle_max(const Instance& inst, int cap = kDefaultOracleCap) {
    return detail::enumerate_assignments(
        inst, Policy::Fifo, [](const Schedule& s) { return metrics(s).max_flow; }, cap);
}

}  // namespace flowsched
