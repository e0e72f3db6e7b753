#include <doctest.h>

#include <random>

#include "flowsched/schedule.hpp"
#include "support/builders.hpp"
#include "support/search_oracle.hpp"

using namespace flowsched;
using flowsched::testing::make_instance;

namespace {

long flow_of(const std::vector<Slice>& slices, int job, long release) {
    long completion = 0;
    for (const auto& sl : slices)
        if (sl.job == job) completion = std::max(completion, sl.end);
    return completion - release;
}

}  // namespace

TEST_CASE("SRPT matches the exhaustive optimum on the classic pair") {
    // frozen from the exhaustive search: flows {4, 1}, total 5
    CHECK(flowsched::testing::optimal_total_flow({{0, 3}, {1, 1}}) == 5);
    auto slices = simulate({{0, 0, 3, 2}, {1, 1, 1, 0}}, Policy::Srpt);
    CHECK(flow_of(slices, 0, 0) == 4);
    CHECK(flow_of(slices, 1, 1) == 1);
}

TEST_CASE("FIFO runs jobs in arrival order") {
    auto slices = simulate({{0, 0, 2, 1}, {1, 1, 2, 1}}, Policy::Fifo);
    REQUIRE(slices.size() == 2);
    CHECK(slices[0].job == 0);
    CHECK(slices[0].start == 0);
    CHECK(slices[0].end == 2);
    CHECK(slices[1].job == 1);
    CHECK(slices[1].start == 2);
    CHECK(slices[1].end == 4);
    CHECK(flow_of(slices, 0, 0) == 2);
    CHECK(flow_of(slices, 1, 1) == 3);
}

TEST_CASE("class dispatch prefers the smaller class and is work-conserving") {
    // A (p=2, class 1) and B (p=1, class 0) both available at 0
    auto slices = simulate({{0, 0, 2, 1}, {1, 0, 1, 0}}, Policy::ClassSjf);
    REQUIRE(slices.size() == 2);
    CHECK(slices[0].job == 1);
    CHECK(slices[0].end == 1);
    CHECK(slices[1].job == 0);
    CHECK(slices[1].start == 1);
    CHECK(slices[1].end == 3);
}

TEST_CASE("simulation never idles while work is available") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SimJob> jobs;
        int n = 1 + static_cast<int>(rng() % 6);
        for (int i = 0; i < n; ++i) {
            long p = 1 + static_cast<long>(rng() % 4);
            jobs.push_back({i, static_cast<long>(rng() % 6), p, class_of(p)});
        }
        for (Policy policy : {Policy::Srpt, Policy::ClassSjf, Policy::Fifo}) {
            auto slices = simulate(jobs, policy);
            // busy exactly sum(p) slots, idle only before some availability
            long busy = 0;
            for (const auto& sl : slices) busy += sl.end - sl.start;
            long total = 0;
            for (const auto& j : jobs) total += j.work;
            CHECK(busy == total);
            for (size_t s = 1; s < slices.size(); ++s) {
                if (slices[s].start == slices[s - 1].end) continue;
                for (const auto& j : jobs) {  // any gap must end at an availability time
                    bool finished_before = true;
                    long done = 0;
                    for (size_t q = 0; q < s; ++q)
                        if (slices[q].job == j.id) done += slices[q].end - slices[q].start;
                    finished_before = done == j.work;
                    if (!finished_before) CHECK(j.available >= slices[s].start);
                }
            }
            auto again = simulate(jobs, policy);
            CHECK(slices.size() == again.size());
        }
    }
}

TEST_CASE("fractional flow follows the executed slots") {
    // job available at 2 with p=2, r=0: slices [2,4), f = (2 + 3)/2
    Instance inst = make_instance(1, {{0, {2}}});
    Schedule s = assemble_schedule(inst, {{0, 0, 2}}, Policy::ClassSjf);
    const auto& o = s.job_outcomes[0];
    CHECK(o.completion == 4);
    CHECK(o.flow == 4);
    CHECK(o.frac_flow == rat_of(5, 2));
}

TEST_CASE("metrics of an empty schedule are zero") {
    Schedule s;
    ScheduleMetrics m = metrics(s);
    CHECK(m.total_flow == 0);
    CHECK(m.max_flow == 0);
    CHECK(m.total_frac_flow == 0);
}

TEST_CASE("remaining volume equals slot-weighted work") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 30; ++trial) {
        int n = 1 + static_cast<int>(rng() % 5);
        std::vector<std::pair<long, std::vector<std::optional<long>>>> jobs;
        for (int i = 0; i < n; ++i)
            jobs.push_back({static_cast<long>(rng() % 5),
                            {1 + static_cast<long>(rng() % 4)}});
        Instance inst = make_instance(1, jobs);
        std::vector<Placement> placements;
        for (int j = 0; j < n; ++j) placements.push_back({j, 0, inst.jobs[j].release});
        Schedule s = assemble_schedule(inst, placements, Policy::Srpt);
        long t_end = 0;
        for (const auto& o : s.job_outcomes) t_end = std::max(t_end, o.completion + 1);
        for (int k = 0; k <= inst.max_class(); ++k) {
            auto series = remaining_volume_series(s, 0, k, t_end);
            long lhs = 0;
            for (long v : series) lhs += v;
            long rhs = 0;
            for (const auto& o : s.job_outcomes) {
                if (class_of(o.proc) != k) continue;
                for (const auto& sl : s.machine_slices[0]) {
                    if (sl.job != o.job) continue;
                    for (long t = sl.start; t < sl.end; ++t) rhs += t - o.release;
                }
            }
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("validate flags broken schedules and accepts good ones") {
    Instance inst = make_instance(1, {{0, {2}}, {1, {1}}});
    Schedule good = assemble_schedule(inst, {{0, 0, 0}, {1, 0, 1}}, Policy::Srpt);
    CHECK(validate(good, inst).empty());

    Schedule overlap = good;
    overlap.machine_slices[0] = {{0, 0, 2}, {1, 1, 2}};
    auto bad = validate(overlap, inst);
    REQUIRE(!bad.empty());
    CHECK(bad[0].find("busy twice") != std::string::npos);

    Schedule early = good;
    early.machine_slices[0] = {{1, 0, 1}, {0, 1, 3}};  // job 1 released at 1
    bad = validate(early, inst);
    bool found = false;
    for (const auto& msg : bad)
        if (msg.find("before release") != std::string::npos) found = true;
    CHECK(found);
}

TEST_CASE("single-machine policies match the exhaustive search on small sets") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 40; ++trial) {
        int n = 1 + static_cast<int>(rng() % 3);
        std::vector<flowsched::testing::SearchJob> jobs;
        std::vector<SimJob> sim;
        for (int i = 0; i < n; ++i) {
            long r = static_cast<long>(rng() % 4);
            long p = 1 + static_cast<long>(rng() % 3);
            jobs.push_back({r, p});
            sim.push_back({i, r, p, class_of(p)});
        }
        auto srpt = simulate(sim, Policy::Srpt);
        long total = 0;
        for (int i = 0; i < n; ++i) total += flow_of(srpt, i, jobs[i].release);
        CHECK(total == flowsched::testing::optimal_total_flow(jobs));

        auto fifo = simulate(sim, Policy::Fifo);
        long worst = 0;
        for (int i = 0; i < n; ++i) worst = std::max(worst, flow_of(fifo, i, jobs[i].release));
        CHECK(worst == flowsched::testing::optimal_max_flow(jobs));
    }
}
