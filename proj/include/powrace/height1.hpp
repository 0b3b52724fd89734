#pragma once

#include <vector>

#include "powrace/params.hpp"

namespace powrace {

// pmf of the supremum deficit in the race between adversarial arrivals and
// the jumper renewal process, with the mass not captured by the truncation.
struct RacePmf {
    std::vector<double> p;    // p[i] = P(race supremum = i), i = 0..max_i
    double tail_bound = 0.0;  // 1 - sum(p), clamped at 0
    double tail_ratio = 0.0;  // p[last]/p[last-1], geometric tail estimate

    double head_sum(int below) const;  // sum of p[i] for i < below
};

// Maclaurin coefficients of the race generating function via truncated
// power-series division. Requires within_tolerance.
RacePmf race_pmf(const ProtocolParams& params, int max_i);

// P(race supremum >= deficit).
double race_tail(const ProtocolParams& params, int deficit);

// P(W = w | L = l): height gained by the adversarial branch across one
// delay window, given it trails the public height by l at the window start.
double window_gain_prob(const ProtocolParams& params, int w, int l);

// Same, for w = 0..w_max at once (shares the quadrature nodes).
std::vector<double> window_gain_row(const ProtocolParams& params, int l, int w_max);

// Row-stochastic (k+1) x (k+1) epoch transition matrix.
struct TransitionMatrix {
    int k = 0;
    int epoch = 0;
    std::vector<double> p;  // row-major, (k+1)^2

    double at(int y, int yp) const { return p[static_cast<std::size_t>(y * (k + 1) + yp)]; }
    double& at(int y, int yp) { return p[static_cast<std::size_t>(y * (k + 1) + yp)]; }
    double row_sum(int y) const;
};

// Shared evaluation core for the epoch chain: caches the window-gain table
// and the per-(gain, lag) mixture over the leading geometric burst.
class EpochEngine {
public:
    explicit EpochEngine(const ProtocolParams& params);

    const ProtocolParams& params() const { return params_; }

    // P(W = w | L = l) from the cached table.
    double window_gain(int w, int l) const;

    // Entry of the j-th epoch matrix before the absorbing column.
    double entry(int j, int y, int yp) const;

    TransitionMatrix matrix(int j) const;

    // Distribution of the chain state after all k epochs from start_row,
    // optionally running the first populated epoch as matrix `first`.
    std::vector<double> chain_distribution() const;

    double violation_probability(bool full_matrix_mode = false) const;

    const RacePmf& race() const { return race_; }

    // Applies epoch j to a distribution over 0..k in place.
    void step(std::vector<double>& dist, int j) const;

private:
    ProtocolParams params_;
    RacePmf race_;
    std::vector<double> geo_;              // (h/l)(a/l)^i
    std::vector<std::vector<double>> wtab_;  // window gain by lag index
    std::vector<std::vector<double>> q_;     // geometric-mixed gain by lag index
    int lag_min_ = 0, lag_max_ = 0;

    const std::vector<double>& q_row(int lag) const;
};

TransitionMatrix epoch_matrix(const ProtocolParams& params, int j);

// Exact probability of a safety violation at height 1 under the optimal
// attack (confirmation depth params.k).
double violation_probability_height1(const ProtocolParams& params,
                                     bool full_matrix_mode = false);

}  // namespace powrace
