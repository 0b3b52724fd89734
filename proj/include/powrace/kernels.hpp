#pragma once

#include <cmath>

namespace powrace {

// Poisson pmf at i with the given mean, evaluated in log space.
inline double poisson_pmf(int i, double mean) {
    if (i < 0) return 0.0;
    if (mean <= 0.0) return i == 0 ? 1.0 : 0.0;
    return std::exp(-mean + i * std::log(mean) - std::lgamma(i + 1.0));
}

// Erlang pdf with integer shape >= 1 and the given rate.
inline double erlang_pdf(double t, int shape, double rate) {
    if (t < 0.0 || rate <= 0.0) return 0.0;
    if (t == 0.0) return shape == 1 ? rate : 0.0;
    return std::exp(shape * std::log(rate) + (shape - 1) * std::log(t) - rate * t -
                    std::lgamma(shape));
}

// Inter-arrival pdf of the jumper renewal process: exponential(h) shifted by delta.
inline double jumper_gap_pdf(double t, double h, double delta) {
    if (t <= delta) return 0.0;
    return h * std::exp(-h * (t - delta));
}

}  // namespace powrace
