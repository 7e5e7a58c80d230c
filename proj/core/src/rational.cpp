#include "traceopt/rational.hpp"

#include <cmath>
#include <limits>

namespace traceopt {

Rational rationalize(double x, std::uint64_t max_den) {
    if (!std::isfinite(x)) throw InputError("rationalize: non-finite input");
    if (max_den == 0) throw InputError("rationalize: max_den must be positive");

    bool neg = x < 0;
    double v = neg ? -x : x;

    // Continued-fraction expansion with convergents p/q; stop before the
    // denominator bound is exceeded, then consider the best semiconvergent.
    std::uint64_t p0 = 0, q0 = 1; // previous convergent
    std::uint64_t p1 = 1, q1 = 0; // current convergent
    double frac = v;
    for (int iter = 0; iter < 64; ++iter) {
        double fl = std::floor(frac);
        if (fl > double(std::numeric_limits<std::uint64_t>::max()) / 2) break;
        std::uint64_t a = std::uint64_t(fl);

        // Next convergent p2/q2 = a*p1 + p0 / a*q1 + q0.
        if (q1 != 0 && a != 0 && q1 > (max_den - q0) / a) {
            // Overshoots the bound: take the largest admissible semiconvergent.
            std::uint64_t t = (max_den - q0) / q1;
            std::uint64_t sp = t * p1 + p0, sq = t * q1 + q0;
            if (sq > 0 && 2 * t >= a) {
                // Semiconvergent is at least as close as the previous convergent.
                Rational semi(static_cast<unsigned long>(sp), static_cast<unsigned long>(sq));
                Rational conv(static_cast<unsigned long>(p1), static_cast<unsigned long>(q1));
                semi.canonicalize();
                conv.canonicalize();
                Rational pick = (std::abs(semi.get_d() - v) <= std::abs(conv.get_d() - v)) ? semi : conv;
                return neg ? Rational(-pick) : pick;
            }
            break;
        }
        std::uint64_t p2 = a * p1 + p0;
        std::uint64_t q2 = a * q1 + q0;
        p0 = p1; q0 = q1;
        p1 = p2; q1 = q2;

        double rem = frac - fl;
        if (rem < 1e-18) break; // exact (within double) expansion terminated
        frac = 1.0 / rem;
        if (!std::isfinite(frac)) break;
    }
    if (q1 == 0) return Rational(0);
    Rational out(static_cast<unsigned long>(p1), static_cast<unsigned long>(q1));
    out.canonicalize();
    return neg ? Rational(-out) : out;
}

} // namespace traceopt
