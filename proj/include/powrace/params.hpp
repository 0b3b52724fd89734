#pragma once

#include <stdexcept>
#include <string>

namespace powrace {

// Raised when parameters fall outside 1/a > 1/h + delta.
struct ToleranceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when a numerical routine cannot meet its accuracy contract.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Mining rates, delay bound and confirmation depth for one protocol instance.
//
// Invariants: a >= 0, h > 0, delta >= 0, k >= 1.
struct ProtocolParams {
    double a = 0.0;      // adversarial mining rate, blocks/second
    double h = 0.0;      // honest mining rate, blocks/second
    double delta = 0.0;  // propagation delay bound, seconds
    int k = 1;           // confirmation depth

    double lambda() const { return a + h; }
    double beta() const { return a / (a + h); }

    // Ultimate fault tolerance: 1/a > 1/h + delta, with a == 0 always inside.
    bool within_tolerance() const {
        if (a == 0.0) return true;
        return 1.0 / a > 1.0 / h + delta;
    }

    void validate() const {
        if (a < 0.0) throw std::invalid_argument("adversarial rate a must be >= 0");
        if (h <= 0.0) throw std::invalid_argument("honest rate h must be > 0");
        if (delta < 0.0) throw std::invalid_argument("delay bound delta must be >= 0");
        if (k < 1) throw std::invalid_argument("confirmation depth k must be >= 1");
    }

    void require_tolerance() const {
        if (!within_tolerance())
            throw ToleranceError("outside ultimate fault tolerance: 1/a <= 1/h + delta (a=" +
                                 std::to_string(a) + ", h=" + std::to_string(h) +
                                 ", delta=" + std::to_string(delta) + ")");
    }

    static ProtocolParams from_rates(double a, double h, double delta, int k) {
        ProtocolParams p{a, h, delta, k};
        p.validate();
        return p;
    }

    static ProtocolParams from_fraction(double lambda, double beta, double delta, int k) {
        if (lambda <= 0.0) throw std::invalid_argument("total rate lambda must be > 0");
        if (beta < 0.0 || beta >= 1.0) throw std::invalid_argument("beta must be in [0,1)");
        return from_rates(lambda * beta, lambda * (1.0 - beta), delta, k);
    }

    ProtocolParams with_k(int k2) const { return from_rates(a, h, delta, k2); }
    ProtocolParams with_delta(double d2) const { return from_rates(a, h, d2, k); }
};

}  // namespace powrace
