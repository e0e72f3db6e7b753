#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsched/rational.hpp"

namespace flowsched {

// Variable of one rounding iteration. Time-indexed variables carry their
// slot; assignment-only variables use slot -1.
struct TraceVar {
    int machine = 0;
    int job = 0;  // job id
    long slot = -1;
};

// One capacity group of an iteration's LP; var_ids index into the round's
// variable list. klass is -1 for release-ordered groups.
struct TraceGroup {
    int machine = 0;
    int klass = -1;
    std::vector<int> var_ids;
    Rat size = 0;
};

// Everything the auditor needs to replay one iteration: the LP's variables
// and groups, the vertex solution, and what got fixed afterwards.
struct TraceRound {
    long unassigned = 0;
    std::vector<int> fixed_jobs;
    long support = 0;
    long tight_capacity = 0;
    std::vector<TraceVar> vars;
    std::vector<Rat> values;
    std::vector<TraceGroup> groups;
};

struct RoundTrace {
    long initial_jobs = 0;
    Rat lp0_objective = 0;
    std::vector<TraceRound> rounds;

    int round_count() const { return static_cast<int>(rounds.size()); }
};

inline nlohmann::ordered_json round_trace_to_json(const RoundTrace& trace) {
    nlohmann::ordered_json out;
    out["initial_jobs"] = trace.initial_jobs;
    out["lp0_objective"] = rat_str(trace.lp0_objective);
    out["lp0_objective_approx"] = rat_approx(trace.lp0_objective);
    out["rounds"] = nlohmann::ordered_json::array();
    for (int r = 0; r < trace.round_count(); ++r) {
        const auto& round = trace.rounds[r];
        nlohmann::ordered_json rj;
        rj["round"] = r;
        rj["unassigned"] = round.unassigned;
        rj["fixed"] = round.fixed_jobs;
        rj["support"] = round.support;
        rj["tight_capacity"] = round.tight_capacity;
        // aggregate the interval layout per (machine, class)
        std::map<std::pair<int, int>, std::vector<Rat>> sizes;
        for (const auto& g : round.groups) sizes[{g.machine, g.klass}].push_back(g.size);
        auto intervals = nlohmann::ordered_json::array();
        for (const auto& [key, list] : sizes) {
            Rat lo = list.front(), hi = list.front();
            for (const auto& s : list) {
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
            intervals.push_back({{"machine", key.first},
                                 {"class", key.second},
                                 {"count", list.size()},
                                 {"min_size", rat_str(lo)},
                                 {"max_size", rat_str(hi)}});
        }
        rj["intervals"] = std::move(intervals);
        out["rounds"].push_back(std::move(rj));
    }
    return out;
}

}  // namespace flowsched
