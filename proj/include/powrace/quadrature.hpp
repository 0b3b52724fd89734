#pragma once

#include <vector>

namespace powrace {

// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    std::vector<double> nodes;
    std::vector<double> weights;

    explicit GaussLegendre(int n);

    // Integrates f over [lo, hi].
    template <class F>
    double integrate(double lo, double hi, F&& f) const {
        if (hi <= lo) return 0.0;
        const double c = 0.5 * (hi - lo);
        const double mid = 0.5 * (hi + lo);
        double acc = 0.0;
        for (std::size_t q = 0; q < nodes.size(); ++q)
            acc += weights[q] * f(mid + c * nodes[q]);
        return c * acc;
    }
};

// Shared 64-node rule; integrands here are entire functions, for which 64
// nodes sit far below double rounding error at these interval lengths.
const GaussLegendre& gauss64();

}  // namespace powrace
