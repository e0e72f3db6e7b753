#pragma once

// Exhaustive single-machine schedule search over unit slots, memoized on
// (slot, remaining work vector). Idling is allowed whenever a future release
// is still pending, so the search space covers every schedule that could
// possibly help. Used as ground truth for the dispatch policies.

#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "flowsched/errors.hpp"

namespace flowsched::testing {

struct SearchJob {
    long release = 0;
    long proc = 0;
};

namespace detail {

struct SearchContext {
    std::vector<SearchJob> jobs;
    long horizon = 0;
    std::map<std::pair<long, std::vector<long>>, long> memo;
};

inline long search_total(SearchContext& ctx, long t, std::vector<long>& rem) {
    bool all_done = true;
    bool pending = false;
    long next_release = std::numeric_limits<long>::max();
    int alive = 0;
    for (size_t i = 0; i < rem.size(); ++i) {
        if (rem[i] == 0) continue;
        all_done = false;
        if (ctx.jobs[i].release <= t)
            ++alive;
        else {
            pending = true;
            next_release = std::min(next_release, ctx.jobs[i].release);
        }
    }
    if (all_done) return 0;
    if (alive == 0) return search_total(ctx, next_release, rem);
    flowsched::require(t <= ctx.horizon, "search ran past the horizon");
    auto key = std::make_pair(t, rem);
    if (auto it = ctx.memo.find(key); it != ctx.memo.end()) return it->second;
    long best = std::numeric_limits<long>::max();
    for (size_t i = 0; i < rem.size(); ++i) {
        if (rem[i] == 0 || ctx.jobs[i].release > t) continue;
        --rem[i];
        best = std::min(best, search_total(ctx, t + 1, rem));
        ++rem[i];
    }
    if (pending) best = std::min(best, search_total(ctx, t + 1, rem));
    best += alive;
    ctx.memo[key] = best;
    return best;
}

inline long search_max(SearchContext& ctx, long t, std::vector<long>& rem) {
    bool all_done = true;
    bool pending = false;
    long next_release = std::numeric_limits<long>::max();
    int alive = 0;
    for (size_t i = 0; i < rem.size(); ++i) {
        if (rem[i] == 0) continue;
        all_done = false;
        if (ctx.jobs[i].release <= t)
            ++alive;
        else {
            pending = true;
            next_release = std::min(next_release, ctx.jobs[i].release);
        }
    }
    if (all_done) return 0;
    if (alive == 0) return search_max(ctx, next_release, rem);
    flowsched::require(t <= ctx.horizon, "search ran past the horizon");
    auto key = std::make_pair(t, rem);
    if (auto it = ctx.memo.find(key); it != ctx.memo.end()) return it->second;
    long best = std::numeric_limits<long>::max();
    for (size_t i = 0; i < rem.size(); ++i) {
        if (rem[i] == 0 || ctx.jobs[i].release > t) continue;
        --rem[i];
        long finished = rem[i] == 0 ? (t + 1 - ctx.jobs[i].release) : 0;
        best = std::min(best, std::max(finished, search_max(ctx, t + 1, rem)));
        ++rem[i];
    }
    if (pending) best = std::min(best, search_max(ctx, t + 1, rem));
    ctx.memo[key] = best;
    return best;
}

inline detail::SearchContext make_context(const std::vector<SearchJob>& jobs) {
    detail::SearchContext ctx;
    ctx.jobs = jobs;
    for (const auto& j : jobs) ctx.horizon = std::max(ctx.horizon, j.release);
    for (const auto& j : jobs) ctx.horizon += j.proc;
    return ctx;
}

}  // namespace detail

inline long optimal_total_flow(const std::vector<SearchJob>& jobs) {
    auto ctx = detail::make_context(jobs);
    std::vector<long> rem;
    for (const auto& j : jobs) rem.push_back(j.proc);
    return detail::search_total(ctx, 0, rem);
}

inline long optimal_max_flow(const std::vector<SearchJob>& jobs) {
    auto ctx = detail::make_context(jobs);
    std::vector<long> rem;
    for (const auto& j : jobs) rem.push_back(j.proc);
    return detail::search_max(ctx, 0, rem);
}

}  // namespace flowsched::testing
