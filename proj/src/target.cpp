#include "powrace/target.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "powrace/kernels.hpp"
#include "powrace/quadrature.hpp"

namespace powrace {

double AgeDensity::operator()(double g) const {
    if (g < 0.0) return 0.0;
    const double norm = delta + 1.0 / h;
    if (g <= delta) return 1.0 / norm;
    return std::exp(-h * (g - delta)) / norm;
}

double AgeDensity::mass_within_delta() const { return delta / (delta + 1.0 / h); }

AgeDensity age_density(const ProtocolParams& params) {
    params.validate();
    return AgeDensity{params.h, params.delta};
}

PostJumperLeadPmf lead_after_jumper_pmf(const ProtocolParams& params, int max_i) {
    const RacePmf race = race_pmf(params, max_i + 1);
    PostJumperLeadPmf out;
    out.s.resize(static_cast<std::size_t>(max_i) + 1);
    out.s[0] = race.p[0] + race.p[1];
    for (int i = 1; i <= max_i; ++i)
        out.s[static_cast<std::size_t>(i)] = race.p[static_cast<std::size_t>(i + 1)];
    out.tail_bound = race.tail_bound;
    return out;
}

namespace {

// int_0^inf f1((t + w) a; c) h e^{-h t} dt in closed form:
// (h/lambda) (a/lambda)^c e^{-a w} sum_{q<=c} (lambda w)^q / q!
double arrivals_before_next_jumper(int c, double w, double a, double h) {
    if (c < 0) return 0.0;
    const double lambda = a + h;
    double s = 1.0, term = 1.0;
    for (int q = 1; q <= c; ++q) {
        term *= lambda * w / q;
        s += term;
    }
    return (h / lambda) * std::pow(a / lambda, c) * std::exp(-a * w) * s;
}

// int_delta^inf f1(g a; j) f_G(g) dg in closed form:
// (a^j / lambda^{j+1}) e^{-a delta} sum_{q<=j} (lambda delta)^q / q! / (delta + 1/h)
double poisson_age_tail(int j, double a, double h, double delta) {
    const double lambda = a + h;
    double s = 1.0, term = 1.0;
    for (int q = 1; q <= j; ++q) {
        term *= lambda * delta / q;
        s += term;
    }
    return std::pow(a / lambda, j) / lambda * std::exp(-a * delta) * s / (delta + 1.0 / h);
}

}  // namespace

LeadJointPmf lead_joint_pmf(const ProtocolParams& params, int max_n) {
    params.validate();
    params.require_tolerance();
    if (max_n < 0) throw std::invalid_argument("max_n must be >= 0");
    const double a = params.a, h = params.h, delta = params.delta;

    const PostJumperLeadPmf lead = lead_after_jumper_pmf(params, max_n);

    // Convolution of the post-jumper lead with the adversarial counts over
    // the residual age window and the wait for the next jumper:
    //   conv_j[n-i] = sum_j P(A_age = j) P(A_wait = n-i-j | case)
    // resolved separately for g < delta (target may or may not be a jumper)
    // and g >= delta (always a jumper; closed form).
    const int c_max = max_n;
    std::vector<double> burst_jumper(static_cast<std::size_t>(c_max) + 1, 0.0);
    std::vector<double> burst_nonjumper(static_cast<std::size_t>(c_max) + 1, 0.0);

    if (delta > 0.0) {
        const GaussLegendre& rule = gauss64();
        const double norm = delta + 1.0 / h;
        for (std::size_t qn = 0; qn < rule.nodes.size(); ++qn) {
            const double g = 0.5 * delta * (1.0 + rule.nodes[qn]);
            const double wq = 0.5 * delta * rule.weights[qn] / norm;
            const double stay_quiet = std::exp(-h * (delta - g));
            // Poisson(g a) masses, iterated.
            double age_mass = std::exp(-g * a);
            for (int j = 0; j <= c_max; ++j) {
                if (j > 0) age_mass *= g * a / j;
                for (int c = 0; c + j <= c_max; ++c) {
                    const double wait = arrivals_before_next_jumper(c, delta - g, a, h);
                    burst_jumper[static_cast<std::size_t>(j + c)] +=
                        wq * age_mass * stay_quiet * wait;
                    burst_nonjumper[static_cast<std::size_t>(j + c)] +=
                        wq * age_mass * (1.0 - stay_quiet) * wait;
                }
            }
        }
    }
    // Age beyond delta: the highest jumper is public, so the target is a
    // jumper and the wait window has no leftover delay.
    for (int j = 0; j <= c_max; ++j) {
        const double tail = poisson_age_tail(j, a, h, delta);
        for (int c = 0; c + j <= c_max; ++c)
            burst_jumper[static_cast<std::size_t>(j + c)] +=
                tail * arrivals_before_next_jumper(c, 0.0, a, h);
    }

    LeadJointPmf out;
    out.max_n = max_n;
    out.f3.assign(static_cast<std::size_t>(max_n) + 1, 0.0);
    out.f4.assign(static_cast<std::size_t>(max_n) + 1, 0.0);
    for (int n = 0; n <= max_n; ++n) {
        double v3 = 0.0, v4 = 0.0;
        for (int i = 0; i <= n; ++i) {
            v3 += lead.s[static_cast<std::size_t>(i)] * burst_jumper[static_cast<std::size_t>(n - i)];
            v4 += lead.s[static_cast<std::size_t>(i)] *
                  burst_nonjumper[static_cast<std::size_t>(n - i)];
        }
        out.f3[static_cast<std::size_t>(n)] = v3;
        out.f4[static_cast<std::size_t>(n)] = v4;
    }
    return out;
}

double LeadJointPmf::mass() const {
    double acc = 0.0;
    for (std::size_t i = 0; i < f3.size(); ++i) acc += f3[i] + f4[i];
    return acc;
}

double LeadJointPmf::jumper_mass() const {
    double acc = 0.0;
    for (double v : f3) acc += v;
    return acc;
}

TransitionMatrix first_epoch_matrix(const ProtocolParams& params, int lead,
                                    bool target_is_jumper) {
    const int k = params.k;
    if (lead < 0 || lead > k - 1)
        throw std::invalid_argument("lead must be within 0..k-1");
    const int row = target_is_jumper ? lead : lead + 1;
    TransitionMatrix out;
    out.k = k;
    out.epoch = target_is_jumper ? 1 : 2;
    out.p.assign(static_cast<std::size_t>((k + 1) * (k + 1)), 0.0);
    if (row <= k - 1) {
        const std::vector<double> gains =
            window_gain_row(params, -lead, std::max(0, k - 1 - row));
        double partial = 0.0;
        for (int yp = row; yp <= k - 1; ++yp) {
            const double v = gains[static_cast<std::size_t>(yp - row)];
            out.at(row, yp) = v;
            partial += v;
        }
        out.at(row, k) = 1.0 - partial;
    } else {
        out.at(row, k) = 1.0;
    }
    return out;
}

TargetProbability violation_probability_target_detail(const ProtocolParams& params) {
    params.validate();
    params.require_tolerance();
    const int k = params.k;
    const EpochEngine engine(params);
    const RacePmf& race = engine.race();
    // Leads of k or more violate outright; they are exactly the mass missing
    // from the truncated joint law.
    const LeadJointPmf joint = lead_joint_pmf(params, k - 1);

    double no_violation = 0.0;
    for (int l = 0; l <= k - 1; ++l) {
        // Jumper target: epoch 1 is the placed-target window, epochs 2..k as
        // at height 1.
        {
            std::vector<double> dist(static_cast<std::size_t>(k) + 1, 0.0);
            const std::vector<double> gains = window_gain_row(params, -l, k - 1 - l);
            double partial = 0.0;
            for (int yp = l; yp <= k - 1; ++yp) {
                const double v = gains[static_cast<std::size_t>(yp - l)];
                dist[static_cast<std::size_t>(yp)] = v;
                partial += v;
            }
            dist[static_cast<std::size_t>(k)] = 1.0 - partial;
            for (int j = 2; j <= k; ++j) engine.step(dist, j);
            double mass = 0.0;
            for (int y = l; y <= k - 1; ++y)
                mass += dist[static_cast<std::size_t>(y)] * race.head_sum(k - y);
            no_violation += joint.f3[static_cast<std::size_t>(l)] * mass;
        }
        // Non-jumper target: the chain starts one height up at the second
        // epoch; epoch 1 is already resolved by the placement.
        {
            std::vector<double> dist(static_cast<std::size_t>(k) + 1, 0.0);
            const int row = l + 1;
            if (row <= k - 1) {
                const std::vector<double> gains = window_gain_row(params, -l, k - 1 - row);
                double partial = 0.0;
                for (int yp = row; yp <= k - 1; ++yp) {
                    const double v = gains[static_cast<std::size_t>(yp - row)];
                    dist[static_cast<std::size_t>(yp)] = v;
                    partial += v;
                }
                dist[static_cast<std::size_t>(k)] = 1.0 - partial;
            } else {
                dist[static_cast<std::size_t>(k)] = 1.0;
            }
            for (int j = 3; j <= k; ++j) engine.step(dist, j);
            double mass = 0.0;
            for (int y = l; y <= k - 1; ++y)
                mass += dist[static_cast<std::size_t>(y)] * race.head_sum(k - y);
            no_violation += joint.f4[static_cast<std::size_t>(l)] * mass;
        }
    }

    TargetProbability out;
    out.probability = std::clamp(1.0 - no_violation, 0.0, 1.0);
    out.e_tail_bound = race.tail_bound;
    out.lead_truncation = k - 1;
    return out;
}

double violation_probability_target(const ProtocolParams& params) {
    return violation_probability_target_detail(params).probability;
}

}  // namespace powrace
