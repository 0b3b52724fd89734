#include "powrace/height1.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "powrace/kernels.hpp"
#include "powrace/quadrature.hpp"

namespace powrace {

double RacePmf::head_sum(int below) const {
    double acc = 0.0;
    const int stop = std::min<int>(below, static_cast<int>(p.size()));
    for (int i = 0; i < stop; ++i) acc += p[static_cast<std::size_t>(i)];
    return acc;
}

RacePmf race_pmf(const ProtocolParams& params, int max_i) {
    params.validate();
    params.require_tolerance();
    if (max_i < 0) throw std::invalid_argument("max_i must be >= 0");
    const double a = params.a, h = params.h, delta = params.delta;
    const int order = max_i + 8;  // guard terms past the requested truncation

    // Generating function = N(r) / D(r) with
    //   N(r) = (1-r)(h - a - h*a*delta)
    //   D(r) = h - exp(a*delta) * exp(-a*delta*r) * ((h+a) r - a r^2)
    const double c0 = h - a - h * a * delta;
    std::vector<double> eps(static_cast<std::size_t>(order) + 1);
    eps[0] = 1.0;
    for (int q = 1; q <= order; ++q)
        eps[static_cast<std::size_t>(q)] = eps[static_cast<std::size_t>(q - 1)] * (-a * delta) / q;
    const double scale = std::exp(a * delta);
    std::vector<double> den(static_cast<std::size_t>(order) + 1, 0.0);
    den[0] = h;
    for (int i = 1; i <= order; ++i) {
        double g = (h + a) * eps[static_cast<std::size_t>(i - 1)];
        if (i >= 2) g -= a * eps[static_cast<std::size_t>(i - 2)];
        den[static_cast<std::size_t>(i)] = -scale * g;
    }
    std::vector<double> coeff(static_cast<std::size_t>(order) + 1, 0.0);
    for (int i = 0; i <= order; ++i) {
        double num = i == 0 ? c0 : (i == 1 ? -c0 : 0.0);
        double acc = num;
        for (int j = 1; j <= i; ++j)
            acc -= den[static_cast<std::size_t>(j)] * coeff[static_cast<std::size_t>(i - j)];
        coeff[static_cast<std::size_t>(i)] = acc / den[0];
    }

    RacePmf out;
    out.p.assign(coeff.begin(), coeff.begin() + max_i + 1);
    double sum = 0.0;
    for (double& v : out.p) {
        if (v < -1e-12)
            throw NumericalError("race pmf series produced a negative coefficient: " +
                                 std::to_string(v));
        v = std::max(0.0, v);
        sum += v;
    }
    out.tail_bound = std::max(0.0, 1.0 - sum);
    // Geometric tail ratio, read off above the series' rounding floor
    // (the division recurrence carries a non-decaying error mode).
    for (std::size_t i = out.p.size(); i-- > 1;) {
        if (out.p[i - 1] > 1e-12 && out.p[i] > 0.0) {
            out.tail_ratio = out.p[i] / out.p[i - 1];
            break;
        }
    }
    return out;
}

double race_tail(const ProtocolParams& params, int deficit) {
    if (deficit < 0) throw std::invalid_argument("deficit must be >= 0");
    if (deficit == 0) return 1.0;
    const RacePmf pmf = race_pmf(params, deficit - 1);
    return std::max(0.0, 1.0 - pmf.head_sum(deficit));
}

namespace {

// Accumulates f1(c; a*(span - s)) * lambda * e^{-lambda s} over the inner
// window for c = 0..c_max, starting the window at `span` remaining seconds.
void inner_window_sum(double weight, double span, double a, double lambda,
                      std::vector<double>& acc) {
    if (span <= 0.0) return;
    const GaussLegendre& rule = gauss64();
    const double c = 0.5 * span, mid = 0.5 * span;
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
        const double s = mid + c * rule.nodes[q];
        const double wq = weight * c * rule.weights[q] * lambda * std::exp(-lambda * s);
        const double x = a * (span - s);
        double term = wq * std::exp(-x);
        for (std::size_t cc = 0; cc < acc.size(); ++cc) {
            acc[cc] += term;
            term *= x / static_cast<double>(cc + 1);
        }
    }
}

}  // namespace

std::vector<double> window_gain_row(const ProtocolParams& params, int l, int w_max) {
    params.validate();
    if (w_max < 0) throw std::invalid_argument("w_max must be >= 0");
    const double a = params.a, delta = params.delta, lambda = params.lambda();
    std::vector<double> row(static_cast<std::size_t>(w_max) + 1, 0.0);

    if (l < 0) {
        for (int w = 0; w <= w_max; ++w)
            row[static_cast<std::size_t>(w)] = poisson_pmf(w, a * delta);
        return row;
    }

    // Gains below the lag happen via adversarial arrivals alone.
    for (int w = 0; w < std::min(l, w_max + 1); ++w)
        row[static_cast<std::size_t>(w)] = poisson_pmf(w, a * delta);

    if (delta == 0.0) {
        if (l == 0 && w_max >= 0) row[0] = 1.0;
        return row;
    }

    const GaussLegendre& rule = gauss64();
    if (l == 0) {
        row[0] = std::exp(-lambda * delta);
        if (w_max >= 1) {
            std::vector<double> acc(static_cast<std::size_t>(w_max), 0.0);
            inner_window_sum(1.0, delta, a, lambda, acc);
            for (int w = 1; w <= w_max; ++w)
                row[static_cast<std::size_t>(w)] = acc[static_cast<std::size_t>(w - 1)];
        }
        return row;
    }

    // l > 0: the lag clears with the l-th adversarial arrival at some t.
    if (l <= w_max) {
        double at_parity = 0.0;
        for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
            const double t = 0.5 * delta * (1.0 + rule.nodes[q]);
            at_parity += 0.5 * delta * rule.weights[q] * erlang_pdf(t, l, a) *
                         std::exp(-lambda * (delta - t));
        }
        row[static_cast<std::size_t>(l)] = at_parity;
        const int extra = w_max - l;  // gains beyond parity
        if (extra >= 1) {
            std::vector<double> acc(static_cast<std::size_t>(extra), 0.0);
            for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
                const double t = 0.5 * delta * (1.0 + rule.nodes[q]);
                const double wq = 0.5 * delta * rule.weights[q] * erlang_pdf(t, l, a);
                inner_window_sum(wq, delta - t, a, lambda, acc);
            }
            for (int w = l + 1; w <= w_max; ++w)
                row[static_cast<std::size_t>(w)] = acc[static_cast<std::size_t>(w - l - 1)];
        }
    }
    return row;
}

double window_gain_prob(const ProtocolParams& params, int w, int l) {
    if (w < 0) throw std::invalid_argument("window gain must be >= 0");
    return window_gain_row(params, l, w)[static_cast<std::size_t>(w)];
}

double TransitionMatrix::row_sum(int y) const {
    double acc = 0.0;
    for (int yp = 0; yp <= k; ++yp) acc += at(y, yp);
    return acc;
}

EpochEngine::EpochEngine(const ProtocolParams& params) : params_(params) {
    params_.validate();
    const int k = params_.k;
    const double lambda = params_.lambda();
    geo_.resize(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
        geo_[static_cast<std::size_t>(i)] = (params_.h / lambda) * std::pow(params_.a / lambda, i);

    // Window-gain rows: one shared row for all negative lags, then 0..k-1.
    const int w_max = std::max(0, k - 1);
    wtab_.resize(static_cast<std::size_t>(k) + 1);
    wtab_[0] = window_gain_row(params_, -1, w_max);
    for (int l = 0; l < k; ++l)
        wtab_[static_cast<std::size_t>(l) + 1] = window_gain_row(params_, l, w_max);

    // Geometric-burst mixture: q(gain, lag) = sum_i geo(i) * W(gain - i | lag - i).
    lag_min_ = 1 - k;
    lag_max_ = k - 1;
    q_.resize(static_cast<std::size_t>(lag_max_ - lag_min_ + 1));
    for (int c = lag_min_; c <= lag_max_; ++c) {
        std::vector<double>& qrow = q_[static_cast<std::size_t>(c - lag_min_)];
        qrow.assign(static_cast<std::size_t>(k), 0.0);
        for (int gain = 0; gain < k; ++gain) {
            double acc = 0.0;
            for (int i = 0; i <= gain; ++i)
                acc += geo_[static_cast<std::size_t>(i)] * window_gain(gain - i, c - i);
            qrow[static_cast<std::size_t>(gain)] = acc;
        }
    }

    if (params_.within_tolerance()) race_ = race_pmf(params_, k + 50);
}

double EpochEngine::window_gain(int w, int l) const {
    const std::vector<double>& row = wtab_[static_cast<std::size_t>(l < 0 ? 0 : l + 1)];
    if (w < 0 || w >= static_cast<int>(row.size())) return 0.0;
    return row[static_cast<std::size_t>(w)];
}

const std::vector<double>& EpochEngine::q_row(int lag) const {
    return q_[static_cast<std::size_t>(std::clamp(lag, lag_min_, lag_max_) - lag_min_)];
}

double EpochEngine::entry(int j, int y, int yp) const {
    const int k = params_.k;
    if (j < 1 || j > k) throw std::invalid_argument("epoch index out of range");
    if (yp < y || yp > k - 1) return 0.0;
    return q_row(j - 1 - y)[static_cast<std::size_t>(yp - y)];
}

TransitionMatrix EpochEngine::matrix(int j) const {
    const int k = params_.k;
    TransitionMatrix out;
    out.k = k;
    out.epoch = j;
    out.p.assign(static_cast<std::size_t>((k + 1) * (k + 1)), 0.0);
    for (int y = 0; y < k; ++y) {
        double partial = 0.0;
        for (int yp = y; yp <= k - 1; ++yp) {
            const double v = entry(j, y, yp);
            out.at(y, yp) = v;
            partial += v;
        }
        out.at(y, k) = 1.0 - partial;  // absorbing column soaks the residual mass
    }
    out.at(k, k) = 1.0;
    return out;
}

void EpochEngine::step(std::vector<double>& dist, int j) const {
    const int k = params_.k;
    std::vector<double> next(static_cast<std::size_t>(k) + 1, 0.0);
    for (int y = 0; y < k; ++y) {
        const double mass = dist[static_cast<std::size_t>(y)];
        if (mass == 0.0) continue;
        double partial = 0.0;
        const std::vector<double>& qrow = q_row(j - 1 - y);
        for (int yp = y; yp <= k - 1; ++yp) {
            const double v = qrow[static_cast<std::size_t>(yp - y)];
            next[static_cast<std::size_t>(yp)] += mass * v;
            partial += v;
        }
        next[static_cast<std::size_t>(k)] += mass * (1.0 - partial);
    }
    next[static_cast<std::size_t>(k)] += dist[static_cast<std::size_t>(k)];
    dist = std::move(next);
}

std::vector<double> EpochEngine::chain_distribution() const {
    const int k = params_.k;
    std::vector<double> dist(static_cast<std::size_t>(k) + 1, 0.0);
    dist[0] = 1.0;
    for (int j = 1; j <= k; ++j) step(dist, j);
    return dist;
}

double EpochEngine::violation_probability(bool full_matrix_mode) const {
    params_.require_tolerance();
    const int k = params_.k;
    std::vector<double> dist;
    if (full_matrix_mode) {
        // Debug path: multiply the explicit matrices left to right.
        std::vector<double> row(static_cast<std::size_t>(k) + 1, 0.0);
        row[0] = 1.0;
        for (int j = 1; j <= k; ++j) {
            const TransitionMatrix mat = matrix(j);
            std::vector<double> next(static_cast<std::size_t>(k) + 1, 0.0);
            for (int y = 0; y <= k; ++y)
                for (int yp = 0; yp <= k; ++yp)
                    next[static_cast<std::size_t>(yp)] +=
                        row[static_cast<std::size_t>(y)] * mat.at(y, yp);
            row = std::move(next);
        }
        dist = std::move(row);
    } else {
        dist = chain_distribution();
    }
    double no_violation = 0.0;
    for (int y = 0; y <= k - 1; ++y)
        no_violation += dist[static_cast<std::size_t>(y)] * race_.head_sum(k - y);
    return std::clamp(1.0 - no_violation, 0.0, 1.0);
}

TransitionMatrix epoch_matrix(const ProtocolParams& params, int j) {
    if (j < 1 || j > params.k) throw std::invalid_argument("epoch index out of range");
    return EpochEngine(params).matrix(j);
}

double violation_probability_height1(const ProtocolParams& params, bool full_matrix_mode) {
    params.require_tolerance();
    return EpochEngine(params).violation_probability(full_matrix_mode);
}

}  // namespace powrace
