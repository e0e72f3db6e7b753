#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsched/errors.hpp"
#include "flowsched/instance.hpp"
#include "flowsched/rational.hpp"

namespace flowsched {

enum class Policy { Srpt, ClassSjf, Fifo };

struct Slice {
    int job = 0;  // job id
    long start = 0;
    long end = 0;
};

struct JobOutcome {
    int job = 0;
    int machine = 0;
    long release = 0;
    long proc = 0;
    long completion = 0;
    long flow = 0;
    Rat frac_flow = 0;
};

struct Schedule {
    int machines = 0;
    std::vector<std::vector<Slice>> machine_slices;
    std::vector<JobOutcome> job_outcomes;  // sorted by job id

    const JobOutcome& outcome_of(int job_id) const {
        for (const auto& o : job_outcomes)
            if (o.job == job_id) return o;
        throw InvariantError("no outcome for job " + std::to_string(job_id));
    }
};

struct ScheduleMetrics {
    long total_flow = 0;
    long max_flow = 0;
    Rat total_frac_flow = 0;
};

// One job as a single-machine simulator sees it: it may become available
// later than its release (tentative schedules do this).
struct SimJob {
    int id = 0;
    long available = 0;
    long work = 0;
    int size_class = 0;
};

// Work-conserving unit-slot simulation of one machine. Preemption happens at
// slot boundaries. Tie-breaking is deterministic: each policy orders by its
// key, then class, then availability, then id.
inline std::vector<Slice> simulate(std::vector<SimJob> jobs, Policy policy) {
    for (const auto& j : jobs) {
        if (j.available < 0) throw ValidationError("negative availability");
        if (j.work < 1) throw ValidationError("job needs positive work");
    }
    std::vector<long> remaining(jobs.size());
    for (size_t i = 0; i < jobs.size(); ++i) remaining[i] = jobs[i].work;
    std::vector<Slice> slices;
    size_t done = 0;
    long t = 0;
    while (done < jobs.size()) {
        int pick = -1;
        long next_avail = -1;
        for (size_t i = 0; i < jobs.size(); ++i) {
            if (remaining[i] == 0) continue;
            if (jobs[i].available > t) {
                if (next_avail < 0 || jobs[i].available < next_avail)
                    next_avail = jobs[i].available;
                continue;
            }
            if (pick < 0) { pick = static_cast<int>(i); continue; }
            const auto& a = jobs[i];
            const auto& b = jobs[pick];
            auto key = [&](const SimJob& j, long rem) {
                switch (policy) {
                    case Policy::Srpt: return std::tuple(rem, (long)j.size_class, j.available, (long)j.id);
                    case Policy::ClassSjf: return std::tuple((long)j.size_class, j.available, (long)j.id, 0L);
                    case Policy::Fifo: return std::tuple(j.available, (long)j.id, 0L, 0L);
                }
                throw InvariantError("unknown policy");
            };
            if (key(a, remaining[i]) < key(b, remaining[pick])) pick = static_cast<int>(i);
        }
        if (pick < 0) {
            require(next_avail > t, "simulator stalled");
            t = next_avail;
            continue;
        }
        if (policy == Policy::ClassSjf) {
            // within one class at most one job may ever be mid-processing
            for (size_t i = 0; i < jobs.size(); ++i) {
                if (static_cast<int>(i) == pick) continue;
                bool partial = remaining[i] > 0 && remaining[i] < jobs[i].work;
                require(!(partial && jobs[i].size_class == jobs[pick].size_class &&
                          remaining[pick] == jobs[pick].work),
                        "two partially processed jobs in one class");
            }
        }
        if (!slices.empty() && slices.back().job == jobs[pick].id && slices.back().end == t)
            slices.back().end = t + 1;
        else
            slices.push_back({jobs[pick].id, t, t + 1});
        if (--remaining[pick] == 0) ++done;
        ++t;
    }
    return slices;
}

// Per-machine job placement used to assemble a full schedule: job index into
// the instance plus the time it becomes available to that machine.
struct Placement {
    int job_index = 0;
    int machine = 0;
    long available = 0;
};

inline Schedule assemble_schedule(const Instance& inst, const std::vector<Placement>& placements,
                                  Policy policy) {
    Schedule out;
    out.machines = inst.machines;
    out.machine_slices.resize(inst.machines);
    std::vector<std::vector<const Placement*>> per_machine(inst.machines);
    for (const auto& pl : placements) per_machine[pl.machine].push_back(&pl);

    for (int i = 0; i < inst.machines; ++i) {
        std::vector<SimJob> sim;
        for (const auto* pl : per_machine[i]) {
            const Job& job = inst.jobs[pl->job_index];
            if (!job.eligible(i))
                throw ValidationError("job " + std::to_string(job.id) +
                                      " placed on ineligible machine");
            sim.push_back({job.id, pl->available, job.proc_on(i), class_of(job.proc_on(i))});
        }
        out.machine_slices[i] = simulate(std::move(sim), policy);
    }

    std::map<int, std::pair<int, const Job*>> by_id;  // id -> (machine, job)
    for (const auto& pl : placements)
        by_id[inst.jobs[pl.job_index].id] = {pl.machine, &inst.jobs[pl.job_index]};
    for (const auto& [id, info] : by_id) {
        const auto& [machine, job] = info;
        JobOutcome o;
        o.job = id;
        o.machine = machine;
        o.release = job->release;
        o.proc = job->proc_on(machine);
        for (const auto& sl : out.machine_slices[machine]) {
            if (sl.job != id) continue;
            o.completion = std::max(o.completion, sl.end);
            // each executed unit at slot t contributes (t - r) / p
            long units = sl.end - sl.start;
            long slot_sum = (sl.start + sl.end - 1) * units / 2;  // sum of slot indices
            o.frac_flow += rat_of(slot_sum - o.release * units, o.proc);
        }
        o.flow = o.completion - o.release;
        out.job_outcomes.push_back(std::move(o));
    }
    return out;
}

inline ScheduleMetrics metrics(const Schedule& s) {
    ScheduleMetrics m;
    for (const auto& o : s.job_outcomes) {
        m.total_flow += o.flow;
        m.max_flow = std::max(m.max_flow, o.flow);
        m.total_frac_flow += o.frac_flow;
    }
    return m;
}

// Structural checks of a schedule against its instance; empty means valid.
inline std::vector<std::string> validate(const Schedule& s, const Instance& inst) {
    std::vector<std::string> bad;
    if (s.machines != inst.machines) bad.push_back("machine count mismatch");
    std::map<int, const Job*> jobs_by_id;
    for (const auto& job : inst.jobs) jobs_by_id[job.id] = &job;

    std::map<int, int> job_machine;
    std::map<int, long> executed;
    for (int i = 0; i < static_cast<int>(s.machine_slices.size()); ++i) {
        long prev_end = -1;
        for (const auto& sl : s.machine_slices[i]) {
            if (sl.start >= sl.end) bad.push_back("empty slice on machine " + std::to_string(i));
            if (sl.start < prev_end)
                bad.push_back("machine " + std::to_string(i) + " busy twice at slot " +
                              std::to_string(sl.start));
            prev_end = sl.end;
            auto it = jobs_by_id.find(sl.job);
            if (it == jobs_by_id.end()) {
                bad.push_back("unknown job " + std::to_string(sl.job));
                continue;
            }
            if (sl.start < it->second->release)
                bad.push_back("job " + std::to_string(sl.job) + " started before release");
            auto [pos, fresh] = job_machine.emplace(sl.job, i);
            if (!fresh && pos->second != i)
                bad.push_back("job " + std::to_string(sl.job) + " migrates between machines");
            executed[sl.job] += sl.end - sl.start;
        }
    }
    for (const auto& [id, job] : jobs_by_id) {
        auto it = job_machine.find(id);
        if (it == job_machine.end()) {
            bad.push_back("job " + std::to_string(id) + " never scheduled");
            continue;
        }
        if (!job->eligible(it->second)) {
            bad.push_back("job " + std::to_string(id) + " on ineligible machine");
            continue;
        }
        if (executed[id] != job->proc_on(it->second))
            bad.push_back("job " + std::to_string(id) + " executed " +
                          std::to_string(executed[id]) + " units, needs " +
                          std::to_string(job->proc_on(it->second)));
    }
    return bad;
}

// Units of work done on class-k jobs per slot, and the remaining-volume curve
// V_k(i, t) = volume of released-but-unfinished class-k work on machine i
// after slot t has executed. Used by the audit identities.
inline std::vector<long> remaining_volume_series(const Schedule& s, int machine, int klass,
                                                 long t_end) {
    std::vector<long> series(t_end, 0);
    for (const auto& o : s.job_outcomes) {
        if (o.machine != machine || class_of(o.proc) != klass) continue;
        std::vector<long> done(t_end + 1, 0);
        for (const auto& sl : s.machine_slices[machine]) {
            if (sl.job != o.job) continue;
            for (long t = sl.start; t < sl.end && t <= t_end; ++t) done[t] = 1;
        }
        long acc = 0;
        for (long t = 0; t < t_end; ++t) {
            acc += done[t];
            if (t >= o.release) series[t] += o.proc - acc;
        }
    }
    return series;
}

inline nlohmann::ordered_json schedule_to_json(const Schedule& s) {
    nlohmann::ordered_json out;
    out["machines"] = nlohmann::ordered_json::array();
    for (const auto& slices : s.machine_slices) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& sl : slices)
            arr.push_back({{"job", sl.job}, {"start", sl.start}, {"end", sl.end}});
        out["machines"].push_back(std::move(arr));
    }
    ScheduleMetrics m = metrics(s);
    nlohmann::ordered_json mj;
    mj["total_flow"] = m.total_flow;
    mj["max_flow"] = m.max_flow;
    mj["total_fractional_flow"] = rat_str(m.total_frac_flow);
    mj["total_fractional_flow_approx"] = rat_approx(m.total_frac_flow);
    auto per_job = nlohmann::ordered_json::array();
    for (const auto& o : s.job_outcomes) {
        per_job.push_back({{"id", o.job},
                           {"machine", o.machine},
                           {"completion", o.completion},
                           {"flow", o.flow},
                           {"fractional_flow", rat_str(o.frac_flow)},
                           {"fractional_flow_approx", rat_approx(o.frac_flow)}});
    }
    mj["per_job"] = std::move(per_job);
    out["metrics"] = std::move(mj);
    return out;
}

}  // namespace flowsched
