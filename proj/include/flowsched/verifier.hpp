#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowsched/errors.hpp"
#include "flowsched/instance.hpp"
#include "flowsched/max_flow.hpp"
#include "flowsched/rational.hpp"
#include "flowsched/schedule.hpp"
#include "flowsched/total_flow.hpp"
#include "flowsched/trace.hpp"

namespace flowsched {

// Replays a finished solve and checks every property the algorithms promise,
// with explicit constants. A report never throws; callers decide what a
// failed check means.

struct CheckRecord {
    std::string lemma;  // short name of the property
    std::string bound;
    std::string observed;
    bool pass = true;
};

struct AuditReport {
    std::vector<CheckRecord> checks;

    bool all_pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
    const CheckRecord& find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.lemma == name) return c;
        throw InvariantError("no check named " + name);
    }
};

inline nlohmann::ordered_json audit_report_to_json(const AuditReport& report) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& c : report.checks)
        arr.push_back({{"lemma", c.lemma},
                       {"bound", c.bound},
                       {"observed", c.observed},
                       {"pass", c.pass}});
    return arr;
}

namespace detail {

inline bool same_schedule(const Schedule& a, const Schedule& b) {
    if (a.machines != b.machines) return false;
    for (int i = 0; i < a.machines; ++i) {
        if (a.machine_slices[i].size() != b.machine_slices[i].size()) return false;
        for (size_t s = 0; s < a.machine_slices[i].size(); ++s) {
            const auto& x = a.machine_slices[i][s];
            const auto& y = b.machine_slices[i][s];
            if (x.job != y.job || x.start != y.start || x.end != y.end) return false;
        }
    }
    return true;
}

inline int job_index_of(const Instance& inst, int job_id) {
    for (int j = 0; j < inst.num_jobs(); ++j)
        if (inst.jobs[j].id == job_id) return j;
    return -1;
}

// Trace bookkeeping shared by both audits: counts decrease by exactly the
// fixed set, every job is fixed once, and each round's recorded solution is
// feasible for that round's own rows.
inline void check_trace_shape(const Instance& inst, const RoundTrace& trace, CheckRecord& rec) {
    auto fail = [&rec](const std::string& why) {
        rec.pass = false;
        if (rec.observed.empty()) rec.observed = why;
    };
    if (trace.initial_jobs != inst.num_jobs()) fail("initial job count mismatch");
    if (trace.rounds.empty()) fail("empty trace");
    long expect = inst.num_jobs();
    std::vector<int> seen;
    for (const auto& round : trace.rounds) {
        if (round.unassigned != expect) fail("round starts with wrong unassigned count");
        expect -= static_cast<long>(round.fixed_jobs.size());
        for (int id : round.fixed_jobs) seen.push_back(id);
        if (round.values.size() != round.vars.size()) fail("values/vars length mismatch");
        long support = 0;
        for (const auto& v : round.values) {
            if (sgn(v) < 0) fail("negative value in trace");
            if (sgn(v) > 0) ++support;
        }
        if (support != round.support) fail("support count mismatch");
        // per-job service feasibility of the recorded solution
        std::map<int, Rat> served;
        for (size_t v = 0; v < round.vars.size(); ++v) {
            const auto& tv = round.vars[v];
            int j = job_index_of(inst, tv.job);
            if (j < 0 || !inst.jobs[j].eligible(tv.machine)) {
                fail("trace variable references bad job/machine");
                continue;
            }
            served[tv.job] += round.values[v] / inst.jobs[j].proc_on(tv.machine);
        }
        for (const auto& [id, amount] : served)
            if (amount < 1) fail("recorded solution underserves job " + std::to_string(id));
        for (const auto& g : round.groups) {
            Rat used = 0;
            for (int v : g.var_ids) {
                if (v < 0 || v >= static_cast<int>(round.values.size())) {
                    fail("group references bad variable");
                    continue;
                }
                used += round.values[v];
            }
            if (used > g.size) fail("recorded solution overfills a group");
        }
    }
    if (expect != 0) fail("not every job was fixed");
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) fail("job fixed twice");
    if (rec.pass) rec.observed = "consistent";
}

// The release-window LP of the max-flow loop only guarantees halving once
// variables live in volume groups, i.e. from the second iteration on; the
// slot-indexed loop halves from the start.
inline void check_halving(const Instance& inst, const RoundTrace& trace, CheckRecord& rec,
                          bool skip_first_transition) {
    const int n = inst.num_jobs();
    rec.bound = "next <= ceil(current/2); rounds <= ceil(log2 n) + 1";
    long worst_rounds = trace.round_count();
    bool ok = worst_rounds <= ceil_log2(std::max(n, 2)) + 1;
    for (int l = 0; l < trace.round_count(); ++l) {
        if (l == 0 && skip_first_transition) continue;
        const auto& round = trace.rounds[l];
        long next = round.unassigned - static_cast<long>(round.fixed_jobs.size());
        if (next > (round.unassigned + 1) / 2) ok = false;
    }
    rec.pass = ok;
    rec.observed = "rounds=" + std::to_string(worst_rounds);
}

// Map (machine, job id, slot) -> value for one round.
inline std::map<std::tuple<int, int, long>, Rat> value_map(const TraceRound& round) {
    std::map<std::tuple<int, int, long>, Rat> out;
    for (size_t v = 0; v < round.vars.size(); ++v)
        out[{round.vars[v].machine, round.vars[v].job, round.vars[v].slot}] = round.values[v];
    return out;
}

// Rounds l >= 1 must be relaxations: the previous solution, restricted to the
// surviving variables, satisfies every new row, and each group size equals
// the carried volume, except that an undersized tail is padded up to the
// grouping threshold. release_threshold applies to release-ordered groups
// (klass -1); class groups use 4 * 2^k.
inline void check_relaxation_chain(const Instance& inst, const RoundTrace& trace,
                                   CheckRecord& rec, const Rat& release_threshold) {
    rec.bound = "carried solution stays feasible";
    rec.observed = "feasible";
    for (int l = 1; l < trace.round_count(); ++l) {
        auto prev = value_map(trace.rounds[l - 1]);
        const auto& round = trace.rounds[l];
        std::map<int, Rat> served;
        for (size_t v = 0; v < round.vars.size(); ++v) {
            const auto& tv = round.vars[v];
            auto it = prev.find({tv.machine, tv.job, tv.slot});
            if (it == prev.end()) {
                rec.pass = false;
                rec.observed = "variable appeared from nowhere";
                return;
            }
            int j = job_index_of(inst, tv.job);
            served[tv.job] += it->second / inst.jobs[j].proc_on(tv.machine);
        }
        for (const auto& [id, amount] : served) {
            if (amount < 1) {
                rec.pass = false;
                rec.observed = "carried solution underserves job " + std::to_string(id);
                return;
            }
        }
        for (const auto& g : round.groups) {
            Rat carried = 0;
            for (int v : g.var_ids) {
                const auto& tv = round.vars[v];
                carried += prev.at({tv.machine, tv.job, tv.slot});
            }
            const Rat threshold =
                g.klass >= 0 ? Rat(4 * (1L << g.klass)) : release_threshold;
            bool ok = carried == g.size || (carried < threshold && g.size == threshold);
            if (!ok) {
                rec.pass = false;
                rec.observed = "group size does not match carried volume";
                return;
            }
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Total flow-time audit.

inline AuditReport audit_total(const Instance& inst, const RoundTrace& trace,
                               const TentativeAssignment& assignment, const Schedule& schedule) {
    AuditReport report;
    const int n = inst.num_jobs();
    const int num_classes = inst.max_class() + 1;
    const long rounds = trace.round_count();

    {  // artifacts must be a coherent bundle before any bound is meaningful
        CheckRecord rec{"consistency", "artifacts coherent", "", true};
        bool shape_ok = true;
        for (int j = 0; j < n; ++j) {
            const auto& pick = assignment[j];
            if (pick.machine < 0 || pick.machine >= inst.machines ||
                !inst.jobs[j].eligible(pick.machine) || pick.slot < inst.jobs[j].release) {
                shape_ok = false;
                rec.observed = "invalid tentative entry for job " + std::to_string(inst.jobs[j].id);
            }
        }
        if (shape_ok) {
            Schedule replay = tentative_to_schedule(inst, assignment);
            if (!detail::same_schedule(replay, schedule)) {
                shape_ok = false;
                rec.observed = "schedule does not match the tentative assignment";
            } else if (!validate(schedule, inst).empty()) {
                shape_ok = false;
                rec.observed = "schedule fails validation";
            }
        }
        rec.pass = shape_ok;
        if (rec.pass) {
            detail::check_trace_shape(inst, trace, rec);
            // fixed rounds must agree with the assignment's slots existing in that round
            if (rec.pass) rec.observed = "consistent";
        }
        report.checks.push_back(rec);
        if (!rec.pass) {
            // still run the remaining checks; they often localize the fault
        }
    }

    {
        CheckRecord rec{"halving", "", "", true};
        detail::check_halving(inst, trace, rec, /*skip_first_transition=*/false);
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"tight-capacity-count", "tight capacity rows <= ceil(unassigned/2)", "",
                        true};
        long worst = 0;
        for (const auto& round : trace.rounds) {
            worst = std::max(worst, round.tight_capacity);
            if (round.tight_capacity > (round.unassigned + 1) / 2) rec.pass = false;
        }
        rec.observed = "max tight capacity rows = " + std::to_string(worst);
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"relaxation-chain", "", "", true};
        detail::check_relaxation_chain(inst, trace, rec, Rat(0));
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"cost-preservation", "cost <= " + rat_str(trace.lp0_objective), "", true};
        Rat cost = 0;
        bool complete = true;
        for (int j = 0; j < n; ++j) {
            if (assignment[j].machine < 0) { complete = false; break; }
            const long p = inst.jobs[j].proc_on(assignment[j].machine);
            cost += rat_of(2 * (assignment[j].slot - inst.jobs[j].release) + p, 2);
        }
        rec.pass = complete && cost <= trace.lp0_objective;
        rec.observed = complete ? rat_str(cost) : "incomplete assignment";
        report.checks.push_back(rec);
    }

    OverloadProfile profile = overload_profile(inst, assignment);
    {
        CheckRecord rec{"window-overload", "excess <= (8 + 10R) * 2^k, R=" + std::to_string(rounds),
                        "", true};
        Rat worst = 0;
        for (const auto& e : profile.entries) {
            if (e.max_excess > (8 + 10 * rounds) * (1L << e.klass)) rec.pass = false;
            worst = std::max(worst, e.normalized);
        }
        rec.observed = "max excess / 2^k = " + rat_str(worst);
        report.checks.push_back(rec);
    }

    long t_end = inst.horizon() + 1;
    for (const auto& o : schedule.job_outcomes) t_end = std::max(t_end, o.completion + 1);
    {
        CheckRecord rec{"backlog-gap", "schedule backlog <= measured window excess", "", true};
        long worst = 0;
        for (int i = 0; i < inst.machines; ++i) {
            for (int k = 0; k < num_classes; ++k) {
                auto vs = remaining_volume_series(schedule, i, k, t_end);
                auto vt = tentative_volume_series(inst, assignment, i, k, t_end);
                const long limit = std::max(profile.at(i, k).max_excess, 0L);
                for (long t = 0; t < t_end; ++t) {
                    worst = std::max(worst, vs[t] - vt[t]);
                    if (vs[t] - vt[t] > limit) rec.pass = false;
                }
            }
        }
        rec.observed = "max backlog = " + std::to_string(worst);
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"class-flow-gap",
                        "class flow <= class fractional flow + machine volume", "", true};
        for (int i = 0; i < inst.machines && rec.pass; ++i) {
            long machine_volume = 0;
            for (const auto& o : schedule.job_outcomes)
                if (o.machine == i) machine_volume += o.proc;
            for (int k = 0; k < num_classes; ++k) {
                long flow = 0;
                Rat frac = 0;
                for (const auto& o : schedule.job_outcomes) {
                    if (o.machine != i || class_of(o.proc) != k) continue;
                    flow += o.flow;
                    frac += o.frac_flow;
                }
                if (Rat(flow) > frac + machine_volume) {
                    rec.pass = false;
                    rec.observed = "machine " + std::to_string(i) + " class " + std::to_string(k);
                }
            }
        }
        if (rec.pass) rec.observed = "holds exactly";
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"flow-accounting", "sum_t V_k == sum of slot-weighted work", "", true};
        for (int i = 0; i < inst.machines && rec.pass; ++i) {
            for (int k = 0; k < num_classes; ++k) {
                auto vs = remaining_volume_series(schedule, i, k, t_end);
                long lhs = 0;
                for (long t = 0; t < t_end; ++t) lhs += vs[t];
                long rhs = 0;
                for (const auto& o : schedule.job_outcomes) {
                    if (o.machine != i || class_of(o.proc) != k) continue;
                    for (const auto& sl : schedule.machine_slices[i]) {
                        if (sl.job != o.job) continue;
                        const long units = sl.end - sl.start;
                        rhs += (sl.start + sl.end - 1) * units / 2 - o.release * units;
                    }
                }
                if (lhs != rhs) {
                    rec.pass = false;
                    rec.observed = "mismatch on machine " + std::to_string(i) + " class " +
                                   std::to_string(k);
                }
            }
        }
        if (rec.pass) rec.observed = "identity holds";
        report.checks.push_back(rec);
    }

    return report;
}

// ---------------------------------------------------------------------------
// Maximum flow-time audit.

inline AuditReport audit_max(const Instance& inst, const RoundTrace& trace,
                             const std::vector<int>& machine_of, const Schedule& schedule,
                             long bound, long max_proc) {
    AuditReport report;
    const long rounds = trace.round_count();

    {
        CheckRecord rec{"consistency", "artifacts coherent", "", true};
        bool ok = true;
        for (int j = 0; j < inst.num_jobs(); ++j) {
            if (machine_of[j] < 0 || machine_of[j] >= inst.machines ||
                !inst.jobs[j].eligible(machine_of[j]) ||
                inst.jobs[j].proc_on(machine_of[j]) > bound) {
                ok = false;
                rec.observed = "job " + std::to_string(inst.jobs[j].id) +
                               " assigned outside the bound";
            }
        }
        if (ok) {
            std::vector<Placement> placements;
            for (int j = 0; j < inst.num_jobs(); ++j)
                placements.push_back({j, machine_of[j], inst.jobs[j].release});
            Schedule replay = assemble_schedule(inst, placements, Policy::Fifo);
            if (!detail::same_schedule(replay, schedule)) {
                ok = false;
                rec.observed = "schedule does not match the assignment under FIFO";
            } else if (!validate(schedule, inst).empty()) {
                ok = false;
                rec.observed = "schedule fails validation";
            }
        }
        rec.pass = ok;
        if (rec.pass) detail::check_trace_shape(inst, trace, rec);
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"halving", "", "", true};
        detail::check_halving(inst, trace, rec, /*skip_first_transition=*/true);
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"relaxation-chain", "", "", true};
        detail::check_relaxation_chain(inst, trace, rec, Rat(2 * max_proc));
        report.checks.push_back(rec);
    }

    std::vector<long> releases;
    for (const auto& job : inst.jobs) releases.push_back(job.release);
    std::sort(releases.begin(), releases.end());
    releases.erase(std::unique(releases.begin(), releases.end()), releases.end());

    {
        // per-round window volume growth against the previous round's mass
        CheckRecord rec{"round-volume-growth",
                        "window volume grows <= 6 * " + std::to_string(max_proc) + " per round",
                        "", true};
        long worst = 0;
        for (int l = 1; l < trace.round_count(); ++l) {
            // masses at release times: previous-round values (fixed jobs of
            // earlier rounds are identical on both sides and cancel)
            auto masses = [&](const TraceRound& round) {
                std::map<std::pair<int, long>, Rat> m;  // (machine, release) -> mass
                for (size_t v = 0; v < round.vars.size(); ++v) {
                    int j = detail::job_index_of(inst, round.vars[v].job);
                    m[{round.vars[v].machine, inst.jobs[j].release}] += round.values[v];
                }
                return m;
            };
            auto cur = masses(trace.rounds[l]);
            auto prev = masses(trace.rounds[l - 1]);
            // jobs fixed by round l-1 count at full volume in round l's total
            for (int id : trace.rounds[l - 1].fixed_jobs) {
                int j = detail::job_index_of(inst, id);
                cur[{machine_of[j], inst.jobs[j].release}] += inst.jobs[j].proc_on(machine_of[j]);
            }
            for (int i = 0; i < inst.machines; ++i) {
                for (size_t a = 0; a < releases.size(); ++a) {
                    for (size_t b = a; b < releases.size(); ++b) {
                        Rat diff = 0;
                        for (long r = releases[a]; r <= releases[b]; ++r) {
                            auto itc = cur.find({i, r});
                            if (itc != cur.end()) diff += itc->second;
                            auto itp = prev.find({i, r});
                            if (itp != prev.end()) diff -= itp->second;
                        }
                        if (diff > 6 * max_proc) rec.pass = false;
                        if (diff > worst) worst = static_cast<long>(rat_approx(diff) + 0.5);
                    }
                }
            }
        }
        rec.observed = "max growth ~ " + std::to_string(worst);
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"window-volume",
                        "window volume <= length + " + std::to_string(bound) + " + 6R*p_max", "",
                        true};
        MaxVolumeProfile profile = volume_check_max(inst, machine_of);
        const long limit = bound + 6 * rounds * max_proc;
        for (const auto& w : profile.per_machine)
            if (w.max_excess > limit) rec.pass = false;
        rec.observed = "max excess = " + std::to_string(profile.max_excess) +
                       ", limit = " + std::to_string(limit);
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"realized-flow",
                        "max flow <= " + std::to_string(bound) + " + (6R+1)*p_max", "", true};
        long realized = metrics(schedule).max_flow;
        const long limit = bound + (6 * rounds + 1) * max_proc;
        rec.pass = realized <= limit;
        rec.observed = std::to_string(realized) + " vs " + std::to_string(limit);
        report.checks.push_back(rec);
    }

    {
        CheckRecord rec{"bound-boundary", "LP feasible at bound, infeasible one below", "", true};
        bool at = maxflow_feasible(inst, bound);
        bool below = bound > 0 && maxflow_feasible(inst, bound - 1);
        rec.pass = at && !below;
        rec.observed = std::string("at=") + (at ? "feasible" : "infeasible") +
                       " below=" + (below ? "feasible" : "infeasible");
        report.checks.push_back(rec);
    }

    return report;
}

// ---------------------------------------------------------------------------
// Fault-injection battery. Every mutation must be caught by some check.

struct TotalArtifacts {
    Instance inst;
    RoundTrace trace;
    TentativeAssignment assignment;
    Schedule schedule;
};

struct MaxArtifacts {
    Instance inst;
    RoundTrace trace;
    std::vector<int> machine_of;
    Schedule schedule;
    long bound = 0;
    long max_proc = 0;
};

inline std::vector<std::pair<std::string, TotalArtifacts>> mutation_battery_total(
    const TotalArtifacts& good) {
    std::vector<std::pair<std::string, TotalArtifacts>> out;
    {
        TotalArtifacts bad = good;  // push one slot far out; cost must blow past the LP bound
        long shift = static_cast<long>(rat_approx(bad.trace.lp0_objective)) + bad.inst.horizon() + 2;
        bad.assignment[0].slot += shift;
        out.push_back({"slot-shift-late", std::move(bad)});
    }
    {
        TotalArtifacts bad = good;
        bad.assignment[0].slot = bad.inst.jobs[0].release - 1;
        out.push_back({"slot-before-release", std::move(bad)});
    }
    {
        TotalArtifacts bad = good;
        for (int j = 0; j < bad.inst.num_jobs(); ++j) {
            for (int i = 0; i < bad.inst.machines; ++i) {
                if (i != bad.assignment[j].machine && bad.inst.jobs[j].eligible(i)) {
                    bad.assignment[j].machine = i;
                    out.push_back({"machine-move", std::move(bad)});
                    goto moved;
                }
            }
        }
    moved:;
    }
    {
        TotalArtifacts bad = good;
        bad.trace.rounds.pop_back();
        out.push_back({"round-drop", std::move(bad)});
    }
    return out;
}

inline std::vector<std::pair<std::string, MaxArtifacts>> mutation_battery_max(
    const MaxArtifacts& good) {
    std::vector<std::pair<std::string, MaxArtifacts>> out;
    {
        MaxArtifacts bad = good;
        bad.bound -= 1;
        out.push_back({"bound-decrement", std::move(bad)});
    }
    {
        MaxArtifacts bad = good;
        for (int j = 0; j < bad.inst.num_jobs(); ++j) {
            for (int i = 0; i < bad.inst.machines; ++i) {
                if (i != bad.machine_of[j] && bad.inst.jobs[j].eligible(i)) {
                    bad.machine_of[j] = i;
                    out.push_back({"machine-move", std::move(bad)});
                    goto moved;
                }
            }
        }
    moved:;
    }
    {
        MaxArtifacts bad = good;
        bad.trace.rounds.pop_back();
        out.push_back({"round-drop", std::move(bad)});
    }
    {
        MaxArtifacts bad = good;
        for (auto& slices : bad.schedule.machine_slices) {
            if (slices.empty()) continue;
            for (auto& sl : slices) {
                sl.start += 1;
                sl.end += 1;
            }
            break;
        }
        out.push_back({"schedule-delay", std::move(bad)});
    }
    return out;
}

}  // namespace flowsched
