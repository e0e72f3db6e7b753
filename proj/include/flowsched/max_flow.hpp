#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "flowsched/errors.hpp"
#include "flowsched/instance.hpp"
#include "flowsched/lp.hpp"
#include "flowsched/rational.hpp"
#include "flowsched/schedule.hpp"
#include "flowsched/total_flow.hpp"  // VarGroup
#include "flowsched/trace.hpp"

namespace flowsched {

// Maximum flow-time: binary search the target bound, check feasibility of an
// assignment LP whose capacity rows range over release-time windows, round
// iteratively to an integral assignment, and run each machine FIFO.

struct MaxVarKey {
    int machine = 0;
    int job_index = 0;
};

struct MaxFlowLp {
    LinearProgram lp;
    std::vector<MaxVarKey> vars;
    std::vector<std::pair<int, VarGroup>> capacity_groups;  // (machine, group)
    std::vector<int> jobs;  // unassigned job indices
    int service_rows = 0;
    long bound = 0;       // candidate maximum flow-time
    long max_proc = 0;    // largest admissible processing time at this bound
    bool no_candidate = false;  // some job has no machine within the bound
};

// LP for a candidate bound: variables only where p_ij <= bound, one service
// row per job, and for every machine and pair of release times t <= t' a row
//   sum of x over jobs released in [t, t']  <=  (t' - t) + bound.
// The objective (total normalized work) is not part of feasibility; it picks
// a canonical minimal vertex when the rounding loop optimizes it.
inline MaxFlowLp build_maxflow_lp(const Instance& inst, long bound) {
    MaxFlowLp out;
    out.bound = bound;
    for (int j = 0; j < inst.num_jobs(); ++j) {
        out.jobs.push_back(j);
        bool any = false;
        for (int i = 0; i < inst.machines; ++i) {
            if (!inst.jobs[j].eligible(i) || inst.jobs[j].proc_on(i) > bound) continue;
            out.vars.push_back({i, j});
            out.max_proc = std::max(out.max_proc, inst.jobs[j].proc_on(i));
            any = true;
        }
        if (!any) out.no_candidate = true;
    }
    if (out.no_candidate) return out;

    out.lp.num_vars = static_cast<int>(out.vars.size());
    for (const auto& key : out.vars)
        out.lp.objective.push_back(Rat(1, inst.jobs[key.job_index].proc_on(key.machine)));

    std::vector<LinearRow> service(inst.num_jobs());
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
    out.service_rows = inst.num_jobs();

    std::vector<long> releases;
    for (const auto& job : inst.jobs) releases.push_back(job.release);
    std::sort(releases.begin(), releases.end());
    releases.erase(std::unique(releases.begin(), releases.end()), releases.end());

    for (int i = 0; i < inst.machines; ++i) {
        for (size_t a = 0; a < releases.size(); ++a) {
            for (size_t b = a; b < releases.size(); ++b) {
                VarGroup group;
                for (int v = 0; v < out.lp.num_vars; ++v) {
                    const auto& key = out.vars[v];
                    if (key.machine != i) continue;
                    const long r = inst.jobs[key.job_index].release;
                    if (r >= releases[a] && r <= releases[b]) group.vars.push_back(v);
                }
                if (group.vars.empty()) continue;
                group.size = (releases[b] - releases[a]) + bound;
                LinearRow row;
                for (int v : group.vars) row.coeffs.push_back({v, Rat(1)});
                row.sense = Sense::LessEq;
                row.rhs = group.size;
                out.lp.add_row(std::move(row));
                out.capacity_groups.push_back({i, std::move(group)});
            }
        }
    }
    return out;
}

inline bool maxflow_feasible(const Instance& inst, long bound) {
    MaxFlowLp probe = build_maxflow_lp(inst, bound);
    if (probe.no_candidate) return false;
    return solve_feasible_basic(probe.lp).status != SolveStatus::Infeasible;
}

struct BoundSearchResult {
    long bound = 0;
    BasicSolution solution;  // a feasible vertex at the returned bound
};

// Smallest integer bound whose LP is feasible. Feasibility is monotone in the
// bound; both sides of the returned boundary are re-checked.
inline BoundSearchResult binary_search_bound(const Instance& inst) {
    validate_instance(inst);
    long lo = 0;
    for (int j = 0; j < inst.num_jobs(); ++j) lo = std::max(lo, inst.fastest_proc(j));
    long hi = inst.horizon();
    require(maxflow_feasible(inst, hi), "horizon bound must be feasible");
    while (lo < hi) {
        long mid = lo + (hi - lo) / 2;
        if (maxflow_feasible(inst, mid))
            hi = mid;
        else
            lo = mid + 1;
    }
    BoundSearchResult out;
    out.bound = lo;
    MaxFlowLp at = build_maxflow_lp(inst, lo);
    require(!at.no_candidate, "boundary bound lost all candidates");
    out.solution = solve_feasible_basic(at.lp);
    require(out.solution.status != SolveStatus::Infeasible, "boundary bound must be feasible");
    require(lo == 0 || !maxflow_feasible(inst, lo - 1), "bound below boundary must be infeasible");
    return out;
}

namespace detail {

inline TraceRound snapshot_round_max(const Instance& inst, const MaxFlowLp& cur,
                                     const BasicSolution& sol) {
    TraceRound rec;
    rec.unassigned = static_cast<long>(cur.jobs.size());
    for (const auto& key : cur.vars)
        rec.vars.push_back({key.machine, inst.jobs[key.job_index].id, -1});
    rec.values = sol.values;
    for (const auto& v : sol.values)
        if (sgn(v) > 0) ++rec.support;
    for (int idx : sol.tight_set)
        if (idx >= cur.service_rows && idx < static_cast<int>(cur.lp.rows.size()))
            ++rec.tight_capacity;
    for (const auto& [machine, group] : cur.capacity_groups)
        rec.groups.push_back({machine, -1, group.vars, group.size});
    return rec;
}

}  // namespace detail

// One rounding iteration for the assignment LP: drop zeros, fix jobs whose
// variable reached p_ij, then regroup surviving variables per machine in
// release order into groups whose previous volume first exceeds twice the
// admissible maximum processing time.
inline MaxFlowLp round_once_max(const Instance& inst, const MaxFlowLp& cur,
                                const BasicSolution& sol, std::vector<int>& machine_of,
                                TraceRound& rec) {
    if (sol.status == SolveStatus::Infeasible || !verify_basic(cur.lp, sol))
        throw InvariantError("round_once_max needs a basic feasible solution");
    rec = detail::snapshot_round_max(inst, cur, sol);

    std::vector<bool> fixed_now(inst.num_jobs(), false);
    for (int v = 0; v < cur.lp.num_vars; ++v) {
        const auto& key = cur.vars[v];
        if (fixed_now[key.job_index] || machine_of[key.job_index] >= 0) continue;
        if (sol.values[v] == inst.jobs[key.job_index].proc_on(key.machine)) {
            fixed_now[key.job_index] = true;
            machine_of[key.job_index] = key.machine;
            rec.fixed_jobs.push_back(inst.jobs[key.job_index].id);
        }
    }

    MaxFlowLp next;
    next.bound = cur.bound;
    next.max_proc = cur.max_proc;
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
    for (const auto& key : next.vars)
        next.lp.objective.push_back(Rat(1, inst.jobs[key.job_index].proc_on(key.machine)));

    std::vector<LinearRow> service(next.jobs.size());
    std::vector<int> service_of(inst.num_jobs(), -1);
    for (size_t s = 0; s < next.jobs.size(); ++s) service_of[next.jobs[s]] = static_cast<int>(s);
    for (int v = 0; v < next.lp.num_vars; ++v) {
        const auto& key = next.vars[v];
        service[service_of[key.job_index]].coeffs.push_back(
            {v, Rat(1, inst.jobs[key.job_index].proc_on(key.machine))});
    }
    for (auto& row : service) {
        require(!row.coeffs.empty(), "unassigned job lost all variables");
        row.sense = Sense::GreaterEq;
        row.rhs = 1;
        Rat carried = 0;
        for (const auto& [v, c] : row.coeffs) carried += c * prev_value[v];
        require(carried >= 1, "carried solution violates a service row");
        next.lp.add_row(std::move(row));
    }
    next.service_rows = static_cast<int>(next.jobs.size());

    const Rat threshold = Rat(2 * cur.max_proc);
    for (int i = 0; i < inst.machines; ++i) {
        std::vector<int> member;
        for (int v = 0; v < next.lp.num_vars; ++v)
            if (next.vars[v].machine == i) member.push_back(v);
        std::sort(member.begin(), member.end(), [&](int a, int b) {
            const Job& ja = inst.jobs[next.vars[a].job_index];
            const Job& jb = inst.jobs[next.vars[b].job_index];
            if (ja.release != jb.release) return ja.release < jb.release;
            return ja.id < jb.id;
        });
        VarGroup group;
        Rat acc = 0;
        auto close_group = [&](bool pad_tail) {
            // pad an undersized tail to the threshold; a tight tail row at its
            // carried volume can otherwise freeze a split job forever
            group.size = pad_tail ? std::max(acc, threshold) : acc;
            LinearRow row;
            for (int v : group.vars) row.coeffs.push_back({v, Rat(1)});
            row.sense = Sense::LessEq;
            row.rhs = group.size;
            next.lp.add_row(std::move(row));
            next.capacity_groups.push_back({i, std::move(group)});
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
    return next;
}

struct MaxFlowResult {
    std::vector<int> machine_of;  // per job index
    long bound = 0;               // the boundary value from the search
    long max_proc = 0;            // admissible maximum at that bound
    RoundTrace trace;
    Schedule schedule;
    long realized_max_flow = 0;
};

// Full pipeline: search the bound, round to an integral assignment, then run
// each machine First-In-First-Out on true release times.
inline MaxFlowResult solve_max(const Instance& inst) {
    validate_instance(inst);
    MaxFlowResult out;
    out.machine_of.assign(inst.num_jobs(), -1);
    out.trace.initial_jobs = inst.num_jobs();

    BoundSearchResult found = binary_search_bound(inst);
    out.bound = found.bound;
    MaxFlowLp cur = build_maxflow_lp(inst, found.bound);
    out.max_proc = cur.max_proc;

    const int cap = round_cap(inst.num_jobs());
    while (!cur.jobs.empty()) {
        if (out.trace.round_count() >= cap)
            throw InvariantError("rounding exceeded " + std::to_string(cap) + " iterations");
        BasicSolution sol = solve_min_basic(cur.lp);
        require(sol.status == SolveStatus::Optimal, "iteration LP must stay feasible");
        TraceRound rec;
        cur = round_once_max(inst, cur, sol, out.machine_of, rec);
        out.trace.rounds.push_back(std::move(rec));
    }

    std::vector<Placement> placements;
    for (int j = 0; j < inst.num_jobs(); ++j) {
        require(out.machine_of[j] >= 0, "assignment incomplete");
        placements.push_back({j, out.machine_of[j], inst.jobs[j].release});
    }
    out.schedule = assemble_schedule(inst, placements, Policy::Fifo);
    out.realized_max_flow = metrics(out.schedule).max_flow;
    return out;
}

struct WindowExcess {
    int machine = 0;
    long max_excess = 0;  // assigned volume in the worst window minus its length
};

struct MaxVolumeProfile {
    std::vector<WindowExcess> per_machine;
    long max_excess = 0;
};

// Exact maximum of assigned-volume overload over all release-time windows.
inline MaxVolumeProfile volume_check_max(const Instance& inst,
                                         const std::vector<int>& machine_of) {
    MaxVolumeProfile out;
    std::vector<long> releases;
    for (const auto& job : inst.jobs) releases.push_back(job.release);
    std::sort(releases.begin(), releases.end());
    releases.erase(std::unique(releases.begin(), releases.end()), releases.end());
    for (int i = 0; i < inst.machines; ++i) {
        long best = 0;
        for (size_t a = 0; a < releases.size(); ++a) {
            for (size_t b = a; b < releases.size(); ++b) {
                long vol = 0;
                for (int j = 0; j < inst.num_jobs(); ++j) {
                    if (machine_of[j] != i) continue;
                    const long r = inst.jobs[j].release;
                    if (r >= releases[a] && r <= releases[b]) vol += inst.jobs[j].proc_on(i);
                }
                best = std::max(best, vol - (releases[b] - releases[a]));
            }
        }
        out.per_machine.push_back({i, best});
        out.max_excess = std::max(out.max_excess, best);
    }
    return out;
}

}  // namespace flowsched
