#pragma once

#include <cmath>
#include <cstdint>

namespace powrace {

// Counter-derived splittable RNG: stream i of a given seed is an independent
// SplitMix64 sequence, so run i produces the same draws whether executed
// serially or on any worker.
class RunRng {
public:
    RunRng(std::uint64_t seed, std::uint64_t stream) {
        state_ = mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ull));
        if (state_ == 0) state_ = 0x106689D45497FDB5ull;
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe as a log argument.
    double uniform_pos() { return 1.0 - uniform(); }

    double exponential(double rate) { return -std::log(uniform_pos()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    // Knuth product method; the means used here are O(1).
    int poisson(double mean) {
        if (mean <= 0.0) return 0;
        const double limit = std::exp(-mean);
        int count = 0;
        double prod = uniform_pos();
        while (prod > limit) {
            prod *= uniform_pos();
            ++count;
        }
        return count;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDull;
        z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53ull;
        return z ^ (z >> 33);
    }

    std::uint64_t state_;
};

}  // namespace powrace
