#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flowsched/errors.hpp"
#include "flowsched/instance.hpp"
#include "flowsched/lp.hpp"
#include "flowsched/rational.hpp"
#include "flowsched/schedule.hpp"
#include "flowsched/trace.hpp"

namespace flowsched {

// Total flow-time: an LP over slot-indexed volume variables with capacity
// constraints on geometric interval families, rounded iteratively until every
// job owns exactly one (machine, slot), then replayed as a real preemptive
// schedule.

struct TotalVarKey {
    int machine = 0;
    int job_index = 0;
    long slot = 0;
};

struct VarGroup {
    std::vector<int> vars;  // indices into the owning lp's variable list
    Rat size = 0;
};

// Capacity groups per (machine, class); class c groups cover all variables of
// jobs whose class on that machine is <= c.
struct TotalLayout {
    int machines = 0;
    int num_classes = 0;  // classes 0..num_classes-1
    std::vector<std::vector<VarGroup>> groups;

    std::vector<VarGroup>& at(int machine, int klass) {
        return groups[machine * num_classes + klass];
    }
    const std::vector<VarGroup>& at(int machine, int klass) const {
        return groups[machine * num_classes + klass];
    }
};

struct TotalLp {
    LinearProgram lp;
    std::vector<TotalVarKey> vars;
    TotalLayout layout;
    std::vector<int> jobs;  // unassigned job indices, in instance order
    int service_rows = 0;   // rows [0, service_rows) are service rows
};

struct TentativePick {
    int machine = -1;
    long slot = -1;
};

// One (machine, slot) per job index; the integral outcome of the rounding.
using TentativeAssignment = std::vector<TentativePick>;

inline Rat total_objective_coeff(const Instance& inst, const TotalVarKey& key) {
    const Job& job = inst.jobs[key.job_index];
    const long p = job.proc_on(key.machine);
    return rat_of(2 * (key.slot - job.release) + p, 2 * p);  // (t - r)/p + 1/2
}

// The initial LP: one variable per eligible (machine, job, slot in [r, T)),
// service rows requiring one full job each, and per (machine, class c)
// capacity rows over fixed time blocks of 4 * 2^c slots.
inline TotalLp build_initial_lp(const Instance& inst) {
    TotalLp out;
    const int n = inst.num_jobs();
    const long horizon = inst.horizon();
    const int num_classes = inst.max_class() + 1;

    for (int j = 0; j < n; ++j) {
        out.jobs.push_back(j);
        const Job& job = inst.jobs[j];
        for (int i = 0; i < inst.machines; ++i) {
            if (!job.eligible(i)) continue;
            for (long t = job.release; t < horizon; ++t) out.vars.push_back({i, j, t});
        }
    }
    out.lp.num_vars = static_cast<int>(out.vars.size());
    out.lp.objective.reserve(out.vars.size());
    for (const auto& key : out.vars) out.lp.objective.push_back(total_objective_coeff(inst, key));

    std::vector<LinearRow> service(n);
    for (int v = 0; v < out.lp.num_vars; ++v) {
        const auto& key = out.vars[v];
        service[key.job_index].coeffs.push_back(
            {v, Rat(1, inst.jobs[key.job_index].proc_on(key.machine))});
    }
    for (auto& row : service) {
        row.sense = Sense::GreaterEq;
        row.rhs = 1;
        out.lp.add_row(std::move(row));
    }
    out.service_rows = n;

    out.layout.machines = inst.machines;
    out.layout.num_classes = num_classes;
    out.layout.groups.resize(inst.machines * num_classes);
    // bucket variable ids by (machine, class block); variables are already
    // ordered by (job, machine, slot), so re-sort each block by (slot, job)
    for (int i = 0; i < inst.machines; ++i) {
        for (int k = 0; k < num_classes; ++k) {
            const long block = 4 * (1L << k);
            std::vector<int> member;
            for (int v = 0; v < out.lp.num_vars; ++v) {
                const auto& key = out.vars[v];
                if (key.machine != i) continue;
                if (class_of(inst.jobs[key.job_index].proc_on(i)) > k) continue;
                member.push_back(v);
            }
            std::sort(member.begin(), member.end(), [&](int a, int b) {
                if (out.vars[a].slot != out.vars[b].slot) return out.vars[a].slot < out.vars[b].slot;
                return inst.jobs[out.vars[a].job_index].id < inst.jobs[out.vars[b].job_index].id;
            });
            size_t pos = 0;
            for (long start = 0; start < horizon; start += block) {
                VarGroup group;
                while (pos < member.size() && out.vars[member[pos]].slot < start + block)
                    group.vars.push_back(member[pos++]);
                if (group.vars.empty()) continue;
                group.size = block;
                LinearRow row;
                for (int v : group.vars) row.coeffs.push_back({v, Rat(1)});
                row.sense = Sense::LessEq;
                row.rhs = group.size;
                out.lp.add_row(std::move(row));
                out.layout.at(i, k).push_back(std::move(group));
            }
        }
    }
    return out;
}

namespace detail {

inline TraceRound snapshot_round(const Instance& inst, const TotalLp& cur,
                                 const BasicSolution& sol) {
    TraceRound rec;
    rec.unassigned = static_cast<long>(cur.jobs.size());
    for (const auto& key : cur.vars)
        rec.vars.push_back({key.machine, inst.jobs[key.job_index].id, key.slot});
    rec.values = sol.values;
    for (const auto& v : sol.values)
        if (sgn(v) > 0) ++rec.support;
    for (int idx : sol.tight_set)
        if (idx >= cur.service_rows && idx < static_cast<int>(cur.lp.rows.size()))
            ++rec.tight_capacity;
    for (int i = 0; i < cur.layout.machines; ++i)
        for (int k = 0; k < cur.layout.num_classes; ++k)
            for (const auto& g : cur.layout.at(i, k))
                rec.groups.push_back({i, k, g.vars, g.size});
    return rec;
}

}  // namespace detail

// One rounding iteration: drop zero variables, permanently place every job
// whose variable reached its full processing time, and regroup the surviving
// variables of each (machine, class) in slot order into groups whose previous
// volume first exceeds 4 * 2^c. The previous solution stays feasible for the
// new LP; that is asserted exactly.
inline TotalLp round_once(const Instance& inst, const TotalLp& cur, const BasicSolution& sol,
                          TentativeAssignment& assignment, TraceRound& rec) {
    if (sol.status != SolveStatus::Optimal || !verify_basic(cur.lp, sol))
        throw InvariantError("round_once needs a basic optimal solution");
    rec = detail::snapshot_round(inst, cur, sol);

    std::vector<bool> fixed_now(inst.num_jobs(), false);
    for (int v = 0; v < cur.lp.num_vars; ++v) {
        const auto& key = cur.vars[v];
        if (fixed_now[key.job_index]) continue;
        if (sol.values[v] == inst.jobs[key.job_index].proc_on(key.machine)) {
            fixed_now[key.job_index] = true;
            assignment[key.job_index] = {key.machine, key.slot};
            rec.fixed_jobs.push_back(inst.jobs[key.job_index].id);
        }
    }

    TotalLp next;
    next.layout.machines = cur.layout.machines;
    next.layout.num_classes = cur.layout.num_classes;
    next.layout.groups.resize(cur.layout.groups.size());
    for (int j : cur.jobs)
        if (!fixed_now[j]) next.jobs.push_back(j);

    std::vector<Rat> prev_value;
    for (int v = 0; v < cur.lp.num_vars; ++v) {
        if (sgn(sol.values[v]) <= 0) continue;
        if (fixed_now[cur.vars[v].job_index]) continue;
        next.vars.push_back(cur.vars[v]);
        prev_value.push_back(sol.values[v]);
    }
    next.lp.num_vars = static_cast<int>(next.vars.size());
    for (const auto& key : next.vars) next.lp.objective.push_back(total_objective_coeff(inst, key));

    std::vector<LinearRow> service(next.jobs.size());
    std::vector<int> service_of(inst.num_jobs(), -1);
    for (size_t s = 0; s < next.jobs.size(); ++s) service_of[next.jobs[s]] = static_cast<int>(s);
    for (int v = 0; v < next.lp.num_vars; ++v) {
        const auto& key = next.vars[v];
        service[service_of[key.job_index]].coeffs.push_back(
            {v, Rat(1, inst.jobs[key.job_index].proc_on(key.machine))});
    }
    for (auto& row : service) {
        row.sense = Sense::GreaterEq;
        row.rhs = 1;
        require(!row.coeffs.empty(), "unassigned job lost all variables");
        Rat carried = 0;
        for (const auto& [v, c] : row.coeffs) carried += c * prev_value[v];
        require(carried >= 1, "carried solution violates a service row");
        next.lp.add_row(std::move(row));
    }
    next.service_rows = static_cast<int>(next.jobs.size());

    for (int i = 0; i < next.layout.machines; ++i) {
        for (int k = 0; k < next.layout.num_classes; ++k) {
            const Rat threshold = 4 * (1L << k);
            std::vector<int> member;
            for (int v = 0; v < next.lp.num_vars; ++v) {
                const auto& key = next.vars[v];
                if (key.machine != i) continue;
                if (class_of(inst.jobs[key.job_index].proc_on(i)) > k) continue;
                member.push_back(v);
            }
            std::sort(member.begin(), member.end(), [&](int a, int b) {
                if (next.vars[a].slot != next.vars[b].slot)
                    return next.vars[a].slot < next.vars[b].slot;
                return inst.jobs[next.vars[a].job_index].id < inst.jobs[next.vars[b].job_index].id;
            });
            VarGroup group;
            Rat acc = 0;
            auto close_group = [&](bool pad_tail) {
                // an undersized tail gets dummy volume up to the threshold,
                // otherwise a tight tail row can freeze a split job forever
                group.size = pad_tail ? std::max(acc, threshold) : acc;
                LinearRow row;
                for (int v : group.vars) row.coeffs.push_back({v, Rat(1)});
                row.sense = Sense::LessEq;
                row.rhs = group.size;
                next.lp.add_row(std::move(row));
                next.layout.at(i, k).push_back(std::move(group));
                group = VarGroup{};
                acc = 0;
            };
            for (int v : member) {
                group.vars.push_back(v);
                acc += prev_value[v];
                if (acc > threshold) close_group(false);
            }
            if (!group.vars.empty()) close_group(true);
        }
    }
    return next;
}

struct TotalFlowResult {
    TentativeAssignment assignment;
    RoundTrace trace;
    Rat lp0_objective = 0;
};

inline Rat tentative_cost(const Instance& inst, const TentativeAssignment& assignment) {
    Rat cost = 0;
    for (int j = 0; j < inst.num_jobs(); ++j) {
        const auto& pick = assignment[j];
        require(pick.machine >= 0, "tentative assignment incomplete");
        const long p = inst.jobs[j].proc_on(pick.machine);
        cost += rat_of(2 * (pick.slot - inst.jobs[j].release) + p, 2);  // (t - r) + p/2
    }
    return cost;
}

inline int round_cap(int n) { return 2 * ceil_log2(std::max(n, 2)) + 4; }

// Solve-and-round loop. The final cost never exceeds the initial LP optimum;
// both are exact rationals and the comparison is asserted.
inline TotalFlowResult solve_total(const Instance& inst) {
    validate_instance(inst);
    TotalFlowResult out;
    out.assignment.assign(inst.num_jobs(), TentativePick{});
    out.trace.initial_jobs = inst.num_jobs();

    TotalLp cur = build_initial_lp(inst);
    const int cap = round_cap(inst.num_jobs());
    while (!cur.jobs.empty()) {
        if (out.trace.round_count() >= cap)
            throw InvariantError("rounding exceeded " + std::to_string(cap) + " iterations");
        BasicSolution sol = solve_min_basic(cur.lp);
        require(sol.status == SolveStatus::Optimal, "iteration LP must stay feasible");
        if (out.trace.rounds.empty()) {
            out.lp0_objective = sol.objective;
            out.trace.lp0_objective = sol.objective;
        }
        TraceRound rec;
        cur = round_once(inst, cur, sol, out.assignment, rec);
        out.trace.rounds.push_back(std::move(rec));
    }
    require(tentative_cost(inst, out.assignment) <= out.lp0_objective,
            "integral cost exceeds the LP lower bound");
    return out;
}

// Replay: each job becomes available at its tentative slot and machines run
// lowest class first, breaking ties by tentative slot then id.
inline Schedule tentative_to_schedule(const Instance& inst,
                                      const TentativeAssignment& assignment) {
    std::vector<Placement> placements;
    for (int j = 0; j < inst.num_jobs(); ++j) {
        const auto& pick = assignment[j];
        require(pick.machine >= 0, "tentative assignment incomplete");
        require(pick.slot >= inst.jobs[j].release, "tentative slot before release");
        placements.push_back({j, pick.machine, pick.slot});
    }
    return assemble_schedule(inst, placements, Policy::ClassSjf);
}

struct OverloadEntry {
    int machine = 0;
    int klass = 0;
    long max_excess = 0;
    Rat normalized = 0;  // max_excess / 2^klass
};

struct OverloadProfile {
    std::vector<OverloadEntry> entries;
    long max_excess = 0;
    Rat max_normalized = 0;

    const OverloadEntry& at(int machine, int klass) const {
        for (const auto& e : entries)
            if (e.machine == machine && e.klass == klass) return e;
        throw InvariantError("no overload entry for that machine/class");
    }
};

// Exact maximum, over every window [t1, t2] and every (machine, class c), of
// the volume of class <= c jobs tentatively placed inside the window minus
// the window length. Window endpoints only need to range over tentative slots
// and their shifts; the profile enumerates all such pairs.
inline OverloadProfile overload_profile(const Instance& inst,
                                        const TentativeAssignment& assignment) {
    OverloadProfile out;
    const int num_classes = inst.max_class() + 1;
    const long horizon = inst.horizon();
    for (int i = 0; i < inst.machines; ++i) {
        for (int k = 0; k < num_classes; ++k) {
            std::vector<std::pair<long, long>> placed;  // (slot, volume)
            std::vector<long> candidates = {0, horizon};
            for (int j = 0; j < inst.num_jobs(); ++j) {
                if (assignment[j].machine != i) continue;
                const long p = inst.jobs[j].proc_on(i);
                if (class_of(p) > k) continue;
                placed.push_back({assignment[j].slot, p});
                candidates.push_back(assignment[j].slot);
                candidates.push_back(assignment[j].slot + p);
            }
            std::sort(candidates.begin(), candidates.end());
            candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
            long best = 0;
            for (size_t a = 0; a < candidates.size(); ++a) {
                for (size_t b = a; b < candidates.size(); ++b) {
                    long vol = 0;
                    for (const auto& [slot, p] : placed)
                        if (slot >= candidates[a] && slot <= candidates[b]) vol += p;
                    best = std::max(best, vol - (candidates[b] - candidates[a]));
                }
            }
            OverloadEntry entry{i, k, best, Rat(best, 1L << k)};
            entry.normalized.canonicalize();
            out.max_excess = std::max(out.max_excess, best);
            out.max_normalized = std::max(out.max_normalized, entry.normalized);
            out.entries.push_back(std::move(entry));
        }
    }
    return out;
}

// Volume of class-k jobs sent to a machine that are released but not yet
// tentatively placed: the curve the backlog audit compares schedules against.
inline std::vector<long> tentative_volume_series(const Instance& inst,
                                                 const TentativeAssignment& assignment,
                                                 int machine, int klass, long t_end) {
    std::vector<long> series(t_end, 0);
    for (int j = 0; j < inst.num_jobs(); ++j) {
        if (assignment[j].machine != machine) continue;
        const long p = inst.jobs[j].proc_on(machine);
        if (class_of(p) != klass) continue;
        for (long t = inst.jobs[j].release; t < std::min(assignment[j].slot, t_end); ++t)
            series[t] += p;
    }
    return series;
}

}  // namespace flowsched
