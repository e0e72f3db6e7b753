// Command-line front end: instance generation, the two solvers with audits,
// oracle comparison, and grid benchmarking. Exit codes: 0 success, 1 bad
// input or infeasible, 2 usage, 3 failed invariant or audit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "flowsched/bench.hpp"
#include "flowsched/instance.hpp"
#include "flowsched/max_flow.hpp"
#include "flowsched/oracle.hpp"
#include "flowsched/schedule.hpp"
#include "flowsched/total_flow.hpp"
#include "flowsched/trace.hpp"
#include "flowsched/verifier.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInvariant = 3;

struct AuditFailure : std::runtime_error {
    explicit AuditFailure(const std::string& what) : std::runtime_error(what) {}
};

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw flowsched::IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw flowsched::IoError("write failed: " + path);
}

struct SolveOptions {
    std::string objective;
    std::string input;
    std::string schedule_out;
    std::string trace_out;
    bool preprocess = false;
    bool no_audit = false;
    bool inject_fault = false;  // test hook: corrupt the artifacts before auditing
};

int cmd_solve(const SolveOptions& opt) {
    using namespace flowsched;
    Instance inst = load_instance(opt.input);
    nlohmann::ordered_json out;
    out["objective"] = opt.objective;
    out["n"] = inst.num_jobs();
    out["m"] = inst.machines;
    bool audit_ok = true;

    if (opt.objective == "total") {
        Instance solved = inst;
        std::optional<long> chosen;
        if (opt.preprocess) {
            // try every distinct processing time as the size guess, keep the
            // cheapest result; guesses that cannot bring the spread under n^2
            // are skipped
            std::optional<long> best_flow;
            for (long guess : distinct_proc_values(inst)) {
                Instance candidate;
                try {
                    candidate = preprocess_small_jobs(inst, guess);
                } catch (const ValidationError&) {
                    continue;
                }
                TotalFlowResult r = solve_total(candidate);
                long flow = metrics(tentative_to_schedule(candidate, r.assignment)).total_flow;
                if (!best_flow || flow < *best_flow) {
                    best_flow = flow;
                    solved = candidate;
                    chosen = guess;
                }
            }
        }
        TotalFlowResult result = solve_total(solved);
        Schedule schedule = tentative_to_schedule(solved, result.assignment);
        ScheduleMetrics m = metrics(schedule);
        out["rounds"] = result.trace.round_count();
        out["lp_lower_bound"] = rat_str(result.lp0_objective);
        out["lp_lower_bound_approx"] = rat_approx(result.lp0_objective);
        out["tentative_cost"] = rat_str(tentative_cost(solved, result.assignment));
        out["total_flow"] = m.total_flow;
        out["max_flow"] = m.max_flow;
        out["total_fractional_flow"] = rat_str(m.total_frac_flow);
        out["total_fractional_flow_approx"] = rat_approx(m.total_frac_flow);
        if (opt.preprocess) {
            out["preprocess"] = {{"applied", chosen.has_value()},
                                 {"candidate", chosen ? *chosen : 0}};
        }
        if (!opt.schedule_out.empty())
            write_text(opt.schedule_out, schedule_to_json(schedule).dump(2) + "\n");
        if (!opt.trace_out.empty())
            write_text(opt.trace_out, round_trace_to_json(result.trace).dump(2) + "\n");
        if (opt.no_audit) {
            std::cerr << "warning: audit skipped (--no-audit)\n";
            out["audit_pass"] = nullptr;
        } else {
            if (opt.inject_fault) result.assignment[0].slot += solved.horizon() + 100;
            AuditReport report = audit_total(solved, result.trace, result.assignment, schedule);
            audit_ok = report.all_pass();
            out["audit_pass"] = audit_ok;
            out["audit"] = audit_report_to_json(report);
        }
    } else {
        if (opt.preprocess) std::cerr << "warning: --preprocess only applies to total flow\n";
        MaxFlowResult result = solve_max(inst);
        ScheduleMetrics m = metrics(result.schedule);
        long max_assigned = 0;
        for (int j = 0; j < inst.num_jobs(); ++j)
            max_assigned = std::max(max_assigned, inst.jobs[j].proc_on(result.machine_of[j]));
        out["rounds"] = result.trace.round_count();
        out["bound"] = result.bound;
        out["max_admissible_proc"] = result.max_proc;
        out["max_assigned_proc"] = max_assigned;
        out["realized_max_flow"] = result.realized_max_flow;
        out["total_flow"] = m.total_flow;
        if (!opt.schedule_out.empty())
            write_text(opt.schedule_out, schedule_to_json(result.schedule).dump(2) + "\n");
        if (!opt.trace_out.empty())
            write_text(opt.trace_out, round_trace_to_json(result.trace).dump(2) + "\n");
        if (opt.no_audit) {
            std::cerr << "warning: audit skipped (--no-audit)\n";
            out["audit_pass"] = nullptr;
        } else {
            if (opt.inject_fault) result.bound -= 1;
            AuditReport report = audit_max(inst, result.trace, result.machine_of, result.schedule,
                                           result.bound, result.max_proc);
            audit_ok = report.all_pass();
            out["audit_pass"] = audit_ok;
            out["audit"] = audit_report_to_json(report);
        }
    }
    std::cout << out.dump(2) << "\n";
    if (!audit_ok) throw AuditFailure("audit failed");
    return kExitOk;
}

int cmd_compare(const std::string& input, int cap) {
    using namespace flowsched;
    Instance inst = load_instance(input);

    TotalFlowResult total = solve_total(inst);
    long alg_total = metrics(tentative_to_schedule(inst, total.assignment)).total_flow;
    OracleResult best_total = oracle_total(inst, cap);

    MaxFlowResult mx = solve_max(inst);
    OracleResult best_max = oracle_max(inst, cap);

    if (alg_total < best_total.value)
        throw AuditFailure("algorithm beat the exact total-flow optimum; oracle broken");
    Rat ratio = rat_of(alg_total, best_total.value);
    Rat gap_in_pmax = mx.max_proc > 0 ? rat_of(mx.realized_max_flow - best_max.value, mx.max_proc)
                                      : Rat(0);

    nlohmann::ordered_json out;
    out["total"] = {{"algorithm", alg_total},
                    {"oracle", best_total.value},
                    {"ratio", rat_str(ratio)},
                    {"ratio_approx", rat_approx(ratio)}};
    out["max"] = {{"algorithm", mx.realized_max_flow},
                  {"oracle", best_max.value},
                  {"bound", mx.bound},
                  {"additive_gap", mx.realized_max_flow - best_max.value},
                  {"p_max", mx.max_proc},
                  {"gap_in_pmax", rat_str(gap_in_pmax)}};
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_bench(const std::string& grid_text, const std::string& out_path,
              const std::string& workdir, int cap) {
    using namespace flowsched;
    GridSpec spec = parse_grid(grid_text);

    std::string dir = workdir;
    if (dir.empty()) {
        auto tmp = std::filesystem::temp_directory_path() / "flowsched_bench";
        std::filesystem::create_directories(tmp);
        dir = tmp.string();
    } else {
        std::filesystem::create_directories(dir);
    }
    BenchReport report = run_bench(spec, dir, cap);
    std::string text = bench_report_to_json(report).dump(2) + "\n";
    if (out_path.empty())
        std::cout << text;
    else
        write_text(out_path, text);
    if (report.aborted)
        throw AuditFailure("audit failed on instance " + report.failing_instance);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Approximation solvers for preemptive flow-time scheduling on unrelated machines"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Write a random instance file");
    int gn = 0, gm = 0;
    long gpmax = 0, grmax = 0;
    double gdensity = 1.0;
    std::uint64_t gseed = 0;
    std::string gout;
    gen->add_option("--n", gn, "number of jobs")->required()->check(CLI::PositiveNumber);
    gen->add_option("--m", gm, "number of machines")->required()->check(CLI::PositiveNumber);
    gen->add_option("--pmax", gpmax, "largest processing time")->required()->check(CLI::PositiveNumber);
    gen->add_option("--rmax", grmax, "largest release time")->required()->check(CLI::NonNegativeNumber);
    gen->add_option("--density", gdensity, "probability a (machine, job) pair is eligible")
        ->required()
        ->check(CLI::Range(std::nextafter(0.0, 1.0), 1.0));
    gen->add_option("--seed", gseed, "generator seed")->required();
    gen->add_option("--out", gout, "output path")->required();

    auto* solve = app.add_subcommand("solve", "Solve an instance and audit the run");
    SolveOptions sopt;
    solve->add_option("--objective", sopt.objective, "total or max")
        ->required()
        ->check(CLI::IsMember({"total", "max"}));
    solve->add_option("--in", sopt.input, "instance file")->required();
    solve->add_option("--out", sopt.schedule_out, "write the schedule here");
    solve->add_option("--trace", sopt.trace_out, "write the rounding trace here");
    solve->add_flag("--preprocess", sopt.preprocess, "shrink the processing-time spread first");
    solve->add_flag("--no-audit", sopt.no_audit, "skip the audit (timing runs only)");
    solve->add_flag("--inject-fault", sopt.inject_fault)->group("");  // test hook

    auto* compare = app.add_subcommand("compare", "Compare both solvers against brute force");
    std::string cin_path;
    int ccap = flowsched::kDefaultOracleCap;
    compare->add_option("--in", cin_path, "instance file")->required();
    compare->add_option("--cap", ccap, "oracle job cap");

    auto* bench = app.add_subcommand("bench", "Run a parameter grid and aggregate results");
    std::string bgrid, bout, bworkdir;
    int bcap = flowsched::kDefaultOracleCap;
    bench->add_option("--grid", bgrid, "grid spec, e.g. n=2..5;m=1,2;pmax=2,4;seeds=0..9");
    bench->add_option("--out", bout, "write the report here (default: stdout)");
    bench->add_option("--workdir", bworkdir, "directory for generated instance files");
    bench->add_option("--cap", bcap, "oracle job cap");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) {
            flowsched::save_instance(
                flowsched::generate_random(gn, gm, gpmax, grmax, gdensity, gseed), gout);
            return kExitOk;
        }
        if (solve->parsed()) return cmd_solve(sopt);
        if (compare->parsed()) return cmd_compare(cin_path, ccap);
        if (bench->parsed()) return cmd_bench(bgrid, bout, bworkdir, bcap);
    } catch (const AuditFailure& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const flowsched::InvariantError& e) {
        std::cerr << "internal invariant failed: " << e.what() << "\n";
        return kExitInvariant;
    } catch (const flowsched::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        // empty or malformed grids are usage errors, not data errors
        if (bench->parsed()) return kExitUsage;
        return kExitInput;
    } catch (const flowsched::CapError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const flowsched::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInvariant;
    }
    return kExitUsage;
}
