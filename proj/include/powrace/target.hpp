#pragma once

#include <vector>

#include "powrace/height1.hpp"
#include "powrace/params.hpp"

namespace powrace {

// Stationary age of the jumper renewal process: uniform over one delay
// bound, exponential beyond it. Integrates to 1 in closed form.
struct AgeDensity {
    double h = 0.0;
    double delta = 0.0;

    double operator()(double g) const;
    double mass_within_delta() const;  // integral over [0, delta]
};

AgeDensity age_density(const ProtocolParams& params);

// pmf of the pre-mining lead right after a jumper: s(0)=e(0)+e(1),
// s(i)=e(i+1).
struct PostJumperLeadPmf {
    std::vector<double> s;
    double tail_bound = 0.0;
};

PostJumperLeadPmf lead_after_jumper_pmf(const ProtocolParams& params, int max_i);

// Joint law of the lead just before the first jumper after the target
// transaction and of whether the target block is that jumper.
struct LeadJointPmf {
    std::vector<double> f3;  // lead = n and target is a jumper
    std::vector<double> f4;  // lead = n and target is not a jumper
    int max_n = 0;

    double mass() const;
    double jumper_mass() const;
};

LeadJointPmf lead_joint_pmf(const ProtocolParams& params, int max_n);

// First-epoch matrix for a placed target: only the start row is populated
// (row `lead` for jumper targets, row `lead+1` otherwise); later epochs
// reuse the height-1 matrices.
TransitionMatrix first_epoch_matrix(const ProtocolParams& params, int lead,
                                    bool target_is_jumper);

struct TargetProbability {
    double probability = 0.0;
    double e_tail_bound = 0.0;
    int lead_truncation = 0;
};

TargetProbability violation_probability_target_detail(const ProtocolParams& params);

// Exact probability of a safety violation at a steady-state target height
// under the optimal attack.
double violation_probability_target(const ProtocolParams& params);

}  // namespace powrace
