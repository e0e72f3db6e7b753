#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "flowsched/errors.hpp"
#include "flowsched/instance.hpp"
#include "flowsched/max_flow.hpp"
#include "flowsched/oracle.hpp"
#include "flowsched/schedule.hpp"
#include "flowsched/total_flow.hpp"
#include "flowsched/verifier.hpp"

namespace flowsched {

// Batch machinery: generate a parameter grid, run both solvers plus audits on
// every instance, and aggregate the observed constants.

struct GridSpec {
    std::vector<int> n{2, 3, 4, 5};
    std::vector<int> m{1, 2};
    std::vector<long> pmax{2, 4};
    std::vector<long> rmax{0, 4};
    std::vector<double> density{1.0, 0.7};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

    long combinations() const {
        return static_cast<long>(n.size()) * m.size() * pmax.size() * rmax.size() *
               density.size() * seeds.size();
    }
};

namespace detail {

inline std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

template <typename T, typename Parse>
std::vector<T> parse_values(const std::string& text, Parse parse) {
    std::vector<T> out;
    for (const auto& item : split(text, ',')) {
        auto dots = item.find("..");
        if (dots != std::string::npos) {
            long lo = std::stol(item.substr(0, dots));
            long hi = std::stol(item.substr(dots + 2));
            if (hi < lo) throw ValidationError("empty range " + item);
            for (long v = lo; v <= hi; ++v) out.push_back(static_cast<T>(v));
        } else {
            out.push_back(parse(item));
        }
    }
    return out;
}

}  // namespace detail

// Grid syntax: "n=2..5;m=1,2;pmax=2,4;rmax=0,4;density=1.0,0.7;seeds=0..9".
// Omitted keys keep the defaults above.
inline GridSpec parse_grid(const std::string& text) {
    GridSpec spec;
    if (text.empty()) return spec;
    for (const auto& part : detail::split(text, ';')) {
        if (part.empty()) continue;
        auto eq = part.find('=');
        if (eq == std::string::npos) throw ValidationError("bad grid term: " + part);
        const std::string key = part.substr(0, eq);
        const std::string values = part.substr(eq + 1);
        try {
            if (key == "n")
                spec.n = detail::parse_values<int>(values, [](const std::string& s) { return std::stoi(s); });
            else if (key == "m")
                spec.m = detail::parse_values<int>(values, [](const std::string& s) { return std::stoi(s); });
            else if (key == "pmax")
                spec.pmax = detail::parse_values<long>(values, [](const std::string& s) { return std::stol(s); });
            else if (key == "rmax")
                spec.rmax = detail::parse_values<long>(values, [](const std::string& s) { return std::stol(s); });
            else if (key == "density")
                spec.density = detail::parse_values<double>(values, [](const std::string& s) { return std::stod(s); });
            else if (key == "seeds")
                spec.seeds = detail::parse_values<std::uint64_t>(values, [](const std::string& s) {
                    return static_cast<std::uint64_t>(std::stoull(s));
                });
            else
                throw ValidationError("unknown grid key: " + key);
        } catch (const std::invalid_argument&) {
            throw ValidationError("bad grid values: " + part);
        } catch (const std::out_of_range&) {
            throw ValidationError("bad grid values: " + part);
        }
    }
    if (spec.combinations() == 0) throw ValidationError("grid is empty");
    for (double d : spec.density)
        if (!(d > 0.0 && d <= 1.0)) throw ValidationError("density must be in (0, 1]");
    return spec;
}

// Everything observed on one instance: both solver pipelines, their audits,
// and (within the cap) the brute-force optima.
struct InstanceRun {
    std::string name;
    int n = 0, m = 0;

    Rat lp0_objective = 0;
    Rat tentative_cost_value = 0;
    long alg_total = 0;
    long rounds_total = 0;
    Rat overload_norm = 0;
    AuditReport total_report;
    long oracle_total_value = -1;  // -1 when the oracle was skipped
    Rat total_ratio = 0;

    long bound = 0;
    long realized = 0;
    long max_proc = 0;
    long max_assigned_proc = 0;
    long rounds_max = 0;
    AuditReport max_report;
    long oracle_max_value = -1;
    long additive_gap = 0;  // realized minus oracle, when the oracle ran

    bool all_audits_pass() const { return total_report.all_pass() && max_report.all_pass(); }
};

inline InstanceRun run_instance(const Instance& inst, const std::string& name,
                                int oracle_cap = kDefaultOracleCap) {
    InstanceRun run;
    run.name = name;
    run.n = inst.num_jobs();
    run.m = inst.machines;

    TotalFlowResult total = solve_total(inst);
    Schedule total_schedule = tentative_to_schedule(inst, total.assignment);
    run.lp0_objective = total.lp0_objective;
    run.tentative_cost_value = tentative_cost(inst, total.assignment);
    run.alg_total = metrics(total_schedule).total_flow;
    run.rounds_total = total.trace.round_count();
    run.overload_norm = overload_profile(inst, total.assignment).max_normalized;
    run.total_report = audit_total(inst, total.trace, total.assignment, total_schedule);

    MaxFlowResult mx = solve_max(inst);
    run.bound = mx.bound;
    run.realized = mx.realized_max_flow;
    run.max_proc = mx.max_proc;
    for (int j = 0; j < inst.num_jobs(); ++j)
        run.max_assigned_proc = std::max(run.max_assigned_proc,
                                         inst.jobs[j].proc_on(mx.machine_of[j]));
    run.rounds_max = mx.trace.round_count();
    run.max_report = audit_max(inst, mx.trace, mx.machine_of, mx.schedule, mx.bound, mx.max_proc);

    if (inst.num_jobs() <= oracle_cap) {
        run.oracle_total_value = oracle_total(inst, oracle_cap).value;
        run.total_ratio = rat_of(run.alg_total, run.oracle_total_value);
        run.oracle_max_value = oracle_max(inst, oracle_cap).value;
        run.additive_gap = run.realized - run.oracle_max_value;
    }
    return run;
}

struct BenchReport {
    GridSpec grid;
    std::vector<InstanceRun> rows;
    bool aborted = false;
    std::string failing_instance;  // path of the instance whose audit failed

    long max_rounds_total = 0;
    long max_rounds_max = 0;
    Rat max_total_ratio = 0;
    Rat max_overload_norm = 0;
    long max_additive_gap = 0;
    long oracle_compared = 0;
};

inline nlohmann::ordered_json bench_report_to_json(const BenchReport& report) {
    nlohmann::ordered_json out;
    out["instances"] = nlohmann::ordered_json::array();
    for (const auto& run : report.rows) {
        nlohmann::ordered_json row;
        row["name"] = run.name;
        row["n"] = run.n;
        row["m"] = run.m;
        row["total"] = {{"lp_lower_bound", rat_str(run.lp0_objective)},
                        {"lp_lower_bound_approx", rat_approx(run.lp0_objective)},
                        {"algorithm", run.alg_total},
                        {"oracle", run.oracle_total_value},
                        {"ratio", run.oracle_total_value > 0 ? rat_str(run.total_ratio) : "n/a"},
                        {"rounds", run.rounds_total},
                        {"overload_per_class", rat_str(run.overload_norm)},
                        {"audit_pass", run.total_report.all_pass()}};
        row["max"] = {{"bound", run.bound},
                      {"realized", run.realized},
                      {"oracle", run.oracle_max_value},
                      {"p_max", run.max_proc},
                      {"max_assigned_proc", run.max_assigned_proc},
                      {"rounds", run.rounds_max},
                      {"audit_pass", run.max_report.all_pass()}};
        out["instances"].push_back(std::move(row));
    }
    out["aggregates"] = {{"instances", report.rows.size()},
                         {"oracle_compared", report.oracle_compared},
                         {"max_rounds_total_flow", report.max_rounds_total},
                         {"max_rounds_max_flow", report.max_rounds_max},
                         {"max_total_flow_ratio", rat_str(report.max_total_ratio)},
                         {"max_total_flow_ratio_approx", rat_approx(report.max_total_ratio)},
                         {"max_overload_per_class", rat_str(report.max_overload_norm)},
                         {"max_additive_gap_max_flow", report.max_additive_gap},
                         {"aborted", report.aborted},
                         {"failing_instance", report.failing_instance}};
    return out;
}

// Runs the whole grid. When workdir is non-empty every instance is saved
// there first, so an audit failure can point at a concrete file; the run
// stops at the first failure.
inline BenchReport run_bench(const GridSpec& spec, const std::string& workdir,
                             int oracle_cap = kDefaultOracleCap) {
    BenchReport report;
    report.grid = spec;
    for (int n : spec.n)
        for (int m : spec.m)
            for (long pmax : spec.pmax)
                for (long rmax : spec.rmax)
                    for (double density : spec.density)
                        for (std::uint64_t seed : spec.seeds) {
                            std::string name = "n" + std::to_string(n) + "_m" + std::to_string(m) +
                                               "_p" + std::to_string(pmax) + "_r" +
                                               std::to_string(rmax) + "_d" +
                                               std::to_string(density).substr(0, 4) + "_s" +
                                               std::to_string(seed);
                            Instance inst = generate_random(n, m, pmax, rmax, density, seed);
                            std::string path;
                            if (!workdir.empty()) {
                                path = workdir + "/" + name + ".json";
                                save_instance(inst, path);
                            }
                            InstanceRun run = run_instance(inst, name, oracle_cap);
                            report.max_rounds_total =
                                std::max(report.max_rounds_total, run.rounds_total);
                            report.max_rounds_max = std::max(report.max_rounds_max, run.rounds_max);
                            report.max_overload_norm =
                                std::max(report.max_overload_norm, run.overload_norm);
                            if (run.oracle_total_value > 0) {
                                ++report.oracle_compared;
                                report.max_total_ratio =
                                    std::max(report.max_total_ratio, run.total_ratio);
                                report.max_additive_gap =
                                    std::max(report.max_additive_gap, run.additive_gap);
                            }
                            bool ok = run.all_audits_pass();
                            report.rows.push_back(std::move(run));
                            if (!ok) {
                                report.aborted = true;
                                report.failing_instance = path.empty() ? name : path;
                                return report;
                            }
                        }
    return report;
}

}  // namespace flowsched
