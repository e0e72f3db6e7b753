#include <doctest.h>

#include "flowsched/max_flow.hpp"
#include "flowsched/oracle.hpp"
#include "support/builders.hpp"

using namespace flowsched;
using flowsched::testing::make_instance;
using flowsched::testing::na;

TEST_CASE("release-window rows carry the right capacity") {
    Instance inst = make_instance(1, {{0, {2}}, {1, {2}}});
    MaxFlowLp lp3 = build_maxflow_lp(inst, 3);
    REQUIRE(!lp3.no_candidate);
    bool found = false;  // the [0,1] window must allow (1 - 0) + 3 units
    for (const auto& [machine, group] : lp3.capacity_groups)
        if (machine == 0 && group.vars.size() == 2) {
            CHECK(group.size == 4);
            found = true;
        }
    CHECK(found);
    CHECK(solve_feasible_basic(lp3.lp).status == SolveStatus::Feasible);

    MaxFlowLp lp2 = build_maxflow_lp(inst, 2);
    CHECK(solve_feasible_basic(lp2.lp).status == SolveStatus::Infeasible);

    // a bound covering all the work on one machine is always feasible
    CHECK(maxflow_feasible(inst, 4));
}

TEST_CASE("jobs with no machine inside the bound make the program infeasible") {
    Instance inst = make_instance(2, {{0, {5, na}}, {0, {1, 1}}});
    CHECK(build_maxflow_lp(inst, 4).no_candidate);
    CHECK_FALSE(maxflow_feasible(inst, 4));
    CHECK(maxflow_feasible(inst, 5));
}

TEST_CASE("the search returns the exact boundary") {
    SUBCASE("single job") {
        BoundSearchResult r = binary_search_bound(make_instance(1, {{0, {3}}}));
        CHECK(r.bound == 3);
    }
    SUBCASE("release pair") {
        BoundSearchResult r = binary_search_bound(make_instance(1, {{0, {2}}, {1, {2}}}));
        CHECK(r.bound == 3);
        CHECK_FALSE(maxflow_feasible(make_instance(1, {{0, {2}}, {1, {2}}}), 2));
    }
    SUBCASE("never exceeds the exact optimum, which is always feasible") {
        for (std::uint64_t seed = 0; seed < 8; ++seed) {
            Instance inst = generate_random(5, 2, 4, 4, 0.7, seed);
            BoundSearchResult r = binary_search_bound(inst);
            long best = oracle_max(inst).value;
            CHECK(r.bound <= best);
            CHECK(maxflow_feasible(inst, best));  // the optimum induces a solution
        }
    }
}

TEST_CASE("an already-integral vertex finishes the rounding immediately") {
    Instance inst = make_instance(1, {{0, {2}}});
    MaxFlowLp built = build_maxflow_lp(inst, 2);
    BasicSolution sol = solve_min_basic(built.lp);
    std::vector<int> machine_of(1, -1);
    TraceRound rec;
    MaxFlowLp next = round_once_max(inst, built, sol, machine_of, rec);
    CHECK(next.jobs.empty());
    CHECK(next.lp.num_vars == 0);
    CHECK(machine_of[0] == 0);
    CHECK(rec.fixed_jobs == std::vector<int>{0});
}

TEST_CASE("round_once_max rejects junk certificates") {
    Instance inst = make_instance(1, {{0, {2}}});
    MaxFlowLp built = build_maxflow_lp(inst, 2);
    BasicSolution fake;
    fake.status = SolveStatus::Feasible;
    fake.values = {Rat(1)};  // violates the service row
    fake.tight_set = {0};
    std::vector<int> machine_of(1, -1);
    TraceRound rec;
    CHECK_THROWS_AS(round_once_max(inst, built, fake, machine_of, rec), InvariantError);
}

TEST_CASE("one job lands on its fastest machine with flow p") {
    Instance inst = make_instance(2, {{0, {4, 2}}});
    MaxFlowResult r = solve_max(inst);
    CHECK(r.machine_of[0] == 1);
    CHECK(r.bound == 2);
    CHECK(r.realized_max_flow == 2);
}

TEST_CASE("halving holds from the first grouped iteration on") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Instance inst = generate_random(6, 2, 4, 4, 0.8, seed);
        MaxFlowResult r = solve_max(inst);
        for (int l = 1; l < r.trace.round_count(); ++l) {
            const auto& round = r.trace.rounds[l];
            long next = round.unassigned - static_cast<long>(round.fixed_jobs.size());
            CHECK(next <= (round.unassigned + 1) / 2);
        }
        CHECK(r.trace.round_count() <= ceil_log2(6) + 1);
    }
}

TEST_CASE("realized flow respects the additive budget and the trivial floor") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        Instance inst = generate_random(5, 2, 4, 4, 1.0, seed);
        MaxFlowResult r = solve_max(inst);
        const long rounds = r.trace.round_count();
        CHECK(r.realized_max_flow <= r.bound + (6 * rounds + 1) * r.max_proc);
        long floor = 0;
        for (int j = 0; j < inst.num_jobs(); ++j)
            floor = std::max(floor, inst.fastest_proc(j));
        CHECK(r.realized_max_flow >= floor);
        CHECK(validate(r.schedule, inst).empty());
    }
}

TEST_CASE("window excess of a full assignment") {
    SUBCASE("single job gives its own volume at a degenerate window") {
        Instance inst = make_instance(1, {{3, {4}}});
        MaxVolumeProfile p = volume_check_max(inst, {0});
        CHECK(p.max_excess == 4);
    }
    SUBCASE("machines without jobs contribute nothing") {
        Instance inst = make_instance(2, {{0, {1, 1}}});
        MaxVolumeProfile p = volume_check_max(inst, {0});
        CHECK(p.per_machine[1].max_excess == 0);
    }
    SUBCASE("stays within the audit budget on a sweep") {
        for (std::uint64_t seed = 0; seed < 6; ++seed) {
            Instance inst = generate_random(5, 2, 4, 4, 0.7, seed);
            MaxFlowResult r = solve_max(inst);
            MaxVolumeProfile p = volume_check_max(inst, r.machine_of);
            CHECK(p.max_excess <= r.bound + 6 * r.trace.round_count() * r.max_proc);
        }
    }
}
