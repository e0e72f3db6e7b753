#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "flowsched/errors.hpp"
#include "flowsched/rational.hpp"

namespace flowsched {

// A job can be ineligible on a machine; that is an explicit empty optional,
// never a sentinel value.
struct Job {
    int id = 0;
    long release = 0;
    std::vector<std::optional<long>> proc;  // one entry per machine

    bool eligible(int machine) const { return proc[machine].has_value(); }
    long proc_on(int machine) const { return *proc[machine]; }
};

// Size class of a processing time: class 0 holds p = 1, class k >= 1 holds
// p in (2^{k-1}, 2^k].
inline int class_of(long p) {
    if (p < 1) throw ValidationError("class_of: processing time must be >= 1");
    return ceil_log2(p);
}

struct Instance {
    int machines = 0;
    std::vector<Job> jobs;  // kept sorted by (release, id)

    int num_jobs() const { return static_cast<int>(jobs.size()); }

    long min_finite_proc() const {
        long best = std::numeric_limits<long>::max();
        for (const auto& j : jobs)
            for (const auto& p : j.proc)
                if (p) best = std::min(best, *p);
        return best;
    }

    long max_finite_proc() const {
        long best = 0;
        for (const auto& j : jobs)
            for (const auto& p : j.proc)
                if (p) best = std::max(best, *p);
        return best;
    }

    long fastest_proc(int job_index) const {
        long best = std::numeric_limits<long>::max();
        for (const auto& p : jobs[job_index].proc)
            if (p) best = std::min(best, *p);
        return best;
    }

    // Slot horizon: every useful schedule fits in [0, T).
    long horizon() const {
        long max_release = 0;
        long total = 0;
        for (int j = 0; j < num_jobs(); ++j) {
            max_release = std::max(max_release, jobs[j].release);
            total += fastest_proc(j);
        }
        return max_release + total;
    }

    // Largest size class present on any machine.
    int max_class() const { return class_of(max_finite_proc()); }

    void sort_jobs() {
        std::stable_sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
            if (a.release != b.release) return a.release < b.release;
            return a.id < b.id;
        });
    }
};

inline void validate_instance(const Instance& inst) {
    if (inst.machines < 1) throw ValidationError("instance needs at least one machine");
    if (inst.jobs.empty()) throw ValidationError("instance needs at least one job");
    std::vector<int> ids;
    for (const auto& job : inst.jobs) {
        if (job.release < 0)
            throw ValidationError("job " + std::to_string(job.id) + " has negative release time");
        if (static_cast<int>(job.proc.size()) != inst.machines)
            throw ValidationError("job " + std::to_string(job.id) + " has wrong machine count");
        bool any = false;
        for (const auto& p : job.proc) {
            if (!p) continue;
            any = true;
            if (*p < 1)
                throw ValidationError("job " + std::to_string(job.id) +
                                      " has non-positive processing time");
        }
        if (!any)
            throw ValidationError("job " + std::to_string(job.id) + " has no eligible machine");
        ids.push_back(job.id);
    }
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
        throw ValidationError("duplicate job ids");
}

// ---------------------------------------------------------------------------
// Canonical JSON form: {"m": int, "jobs": [{"id", "r", "p"}...]}, jobs sorted
// by (r, id), ineligible entries serialized as null, 2-space indent.

inline nlohmann::ordered_json instance_to_json(const Instance& inst) {
    nlohmann::ordered_json out;
    out["m"] = inst.machines;
    out["jobs"] = nlohmann::ordered_json::array();
    for (const auto& job : inst.jobs) {
        nlohmann::ordered_json jj;
        jj["id"] = job.id;
        jj["r"] = job.release;
        auto parr = nlohmann::ordered_json::array();
        for (const auto& p : job.proc) {
            if (p)
                parr.push_back(*p);
            else
                parr.push_back(nullptr);
        }
        jj["p"] = std::move(parr);
        out["jobs"].push_back(std::move(jj));
    }
    return out;
}

inline Instance instance_from_json(const nlohmann::json& in) {
    Instance inst;
    try {
        inst.machines = in.at("m").get<int>();
        for (const auto& jj : in.at("jobs")) {
            Job job;
            job.id = jj.at("id").get<int>();
            job.release = jj.at("r").get<long>();
            for (const auto& p : jj.at("p")) {
                if (p.is_null())
                    job.proc.push_back(std::nullopt);
                else
                    job.proc.push_back(p.get<long>());
            }
            inst.jobs.push_back(std::move(job));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad instance json: ") + e.what());
    }
    inst.sort_jobs();
    validate_instance(inst);
    return inst;
}

inline std::string instance_to_string(const Instance& inst) {
    return instance_to_json(inst).dump(2) + "\n";
}

inline Instance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json data;
    try {
        in >> data;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    return instance_from_json(data);
}

inline void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << instance_to_string(inst);
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------

// Rescale so that the smallest finite processing time becomes 1. Processing
// and release times are divided by the same factor, so the instance keeps its
// shape; if any value does not divide exactly the caller must pre-scale.
inline std::pair<Instance, long> normalize(const Instance& inst) {
    long scale = inst.min_finite_proc();
    if (scale == 1) return {inst, 1};
    Instance out = inst;
    for (auto& job : out.jobs) {
        if (job.release % scale != 0)
            throw ValidationError("normalize: release time " + std::to_string(job.release) +
                                  " of job " + std::to_string(job.id) + " is not divisible by " +
                                  std::to_string(scale) + "; pre-scale the instance");
        job.release /= scale;
        for (auto& p : job.proc) {
            if (!p) continue;
            if (*p % scale != 0)
                throw ValidationError("normalize: processing time " + std::to_string(*p) +
                                      " of job " + std::to_string(job.id) +
                                      " is not divisible by " + std::to_string(scale) +
                                      "; pre-scale the instance");
            *p /= scale;
        }
    }
    return {out, scale};
}

// Squeeze the processing-time spread under a guessed largest size: entries
// above the guess become ineligible (a correct guess never needs them) and
// entries below guess/n^2 are raised to ceil(guess/n^2), so max/min <= n^2
// afterwards. Guesses that strand a job with no machine are rejected; callers
// enumerate the distinct processing times and skip those.
inline Instance preprocess_small_jobs(const Instance& inst, long p_max_guess) {
    if (p_max_guess < 1) throw ValidationError("p_max_guess must be >= 1");
    Instance out = inst;
    const long n = out.num_jobs();
    const long n2 = n * n;
    const long raised = ceil_div(p_max_guess, n2);
    for (auto& job : out.jobs) {
        bool any = false;
        for (auto& p : job.proc) {
            if (!p) continue;
            if (*p > p_max_guess) {
                p = std::nullopt;
                continue;
            }
            if ((*p) * n2 < p_max_guess) *p = raised;
            any = true;
        }
        if (!any)
            throw ValidationError("preprocess: candidate " + std::to_string(p_max_guess) +
                                  " leaves job " + std::to_string(job.id) +
                                  " with no eligible machine");
    }
    require(out.max_finite_proc() <= n2 * out.min_finite_proc(),
            "preprocess left the spread above n^2");
    return out;
}

// Distinct finite processing times, ascending; the candidate pool for the
// preprocessing guess.
inline std::vector<long> distinct_proc_values(const Instance& inst) {
    std::vector<long> vals;
    for (const auto& job : inst.jobs)
        for (const auto& p : job.proc)
            if (p) vals.push_back(*p);
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    return vals;
}

// ---------------------------------------------------------------------------

// Deterministic generator. All draws go through one fixed-algorithm engine in
// a fixed order, so a seed pins the instance bytes exactly.
inline Instance generate_random(int n, int m, long p_max, long r_max, double density,
                                std::uint64_t seed) {
    if (n < 1 || m < 1) throw ValidationError("generate: n and m must be >= 1");
    if (p_max < 1) throw ValidationError("generate: p_max must be >= 1");
    if (r_max < 0) throw ValidationError("generate: r_max must be >= 0");
    if (!(density > 0.0 && density <= 1.0))
        throw ValidationError("generate: density must be in (0, 1]");
    std::mt19937_64 rng(seed);
    auto draw = [&rng](long lo, long hi) {  // uniform-enough and reproducible
        return lo + static_cast<long>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
    };
    auto draw_unit = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };

    Instance inst;
    inst.machines = m;
    for (int j = 0; j < n; ++j) {
        Job job;
        job.id = j;
        job.release = draw(0, r_max);
        std::vector<bool> eligible(m);
        bool any = false;
        for (int i = 0; i < m; ++i) {
            eligible[i] = draw_unit() < density;
            any = any || eligible[i];
        }
        if (!any) eligible[static_cast<int>(rng() % static_cast<std::uint64_t>(m))] = true;
        for (int i = 0; i < m; ++i) {
            if (eligible[i])
                job.proc.push_back(draw(1, p_max));
            else
                job.proc.push_back(std::nullopt);
        }
        inst.jobs.push_back(std::move(job));
    }
    inst.sort_jobs();
    validate_instance(inst);
    return inst;
}

}  // namespace flowsched
