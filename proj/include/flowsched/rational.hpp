#pragma once

#include <gmpxx.h>

#include <string>

namespace flowsched {

// Exact arbitrary-precision rational. All solver and metric arithmetic uses
// this type; doubles appear only as display approximations.
using Rat = mpq_class;
using BigInt = mpz_class;

inline std::string rat_str(const Rat& q) { return q.get_str(); }

inline double rat_approx(const Rat& q) { return q.get_d(); }

inline Rat rat_of(long num, long den = 1) {
    Rat q(num, den);
    q.canonicalize();
    return q;
}

// Smallest k >= 0 with value <= 2^k.
inline int ceil_log2(long value) {
    int k = 0;
    long cap = 1;
    while (cap < value) {
        cap <<= 1;
        ++k;
    }
    return k;
}

inline long ceil_div(long a, long b) { return (a + b - 1) / b; }

}  // namespace flowsched
