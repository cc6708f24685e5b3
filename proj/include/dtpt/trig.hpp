#pragma once

#include <cmath>

namespace dtpt {

// sin(2*pi*u) and cos(2*pi*u) with exact zeros at quarter turns.
//
// The photon kernels sample the carrier at multiples of the emitter spacing,
// and the chiral/parity structure of the coupling matrices rests on
// cos(2*pi*d) and sin(2*pi*d) vanishing *exactly* at d = 1/4, 1/2, 3/4, ...
// Plain sin(2*M_PI*u) misses those zeros by ~1e-16 because 2*pi is rounded
// once and the product again. Instead the argument is reduced mod 1 in long
// double, split into an exact quarter-turn index plus a remainder in [0, 1/4),
// and only the remainder ever meets a pi.

namespace detail {

struct quarter_split {
    int quadrant;       // 0..3
    long double t;      // remainder in [0, 1), angle = t * pi/2 within the quadrant
};

inline quarter_split split_turn(long double u) {
    long double r = u - std::floor(u);   // [0, 1)
    long double s = 4.0L * r;
    int q = static_cast<int>(s);         // 0..3 (s < 4 exactly since r < 1)
    if (q > 3) q = 3;
    return {q, s - q};
}

inline constexpr long double half_pi_l = 1.57079632679489661923132169163975144L;

}

inline double sin_2pi(long double u) {
    auto [q, t] = detail::split_turn(u);
    long double a = t * detail::half_pi_l;
    long double s = std::sin(a), c = std::cos(a);
    double v;
    switch (q) {
        case 0:  v = static_cast<double>(s);  break;
        case 1:  v = static_cast<double>(c);  break;
        case 2:  v = static_cast<double>(-s); break;
        default: v = static_cast<double>(-c); break;
    }
    return v + 0.0;   // fold -0.0 into +0.0 so exact zeros serialize as "0"
}

inline double cos_2pi(long double u) {
    auto [q, t] = detail::split_turn(u);
    long double a = t * detail::half_pi_l;
    long double s = std::sin(a), c = std::cos(a);
    double v;
    switch (q) {
        case 0:  v = static_cast<double>(c);  break;
        case 1:  v = static_cast<double>(-s); break;
        case 2:  v = static_cast<double>(-c); break;
        default: v = static_cast<double>(s);  break;
    }
    return v + 0.0;
}

}
