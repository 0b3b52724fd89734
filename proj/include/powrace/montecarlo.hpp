#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "powrace/block_tree.hpp"
#include "powrace/compact_state.hpp"
#include "powrace/params.hpp"
#include "powrace/policies.hpp"

namespace powrace {

struct EstimateWithCI {
    double estimate = 0.0;
    double std_error = 0.0;
    std::uint64_t runs = 0;
    std::uint64_t seed = 0;
    double bias_bound = 0.0;  // truncated-horizon bias of the no-violation calls
};

struct RunConfig {
    ProtocolParams params;
    PolicyKind policy = PolicyKind::BaitAndSwitch;
    const Policy* custom_policy = nullptr;  // used when policy == Custom
    std::uint64_t runs = 100000;
    std::uint64_t seed = 1;
    int cutoff_deficit = 0;     // 0 = default k + 60
    int warmup_jumpers = 10000;  // general target only, per logical stream
    int threads = 0;             // 0 = hardware concurrency
};

// Estimates the probability of a height-1 safety violation by simulating the
// arrival race on the compact state under the configured policy. A run ends
// in failure once the lower branch trails max(k, public height) by the
// cutoff deficit; the geometric bias bound for that truncation is reported.
EstimateWithCI simulate_violation(const RunConfig& config);

// Same for a steady-state target: the pre-mining lead process is warmed up
// per logical stream, a target draw decides jumper status and lead, and the
// attack proceeds from the placed start state.
EstimateWithCI simulate_target_violation(const RunConfig& config);

// Empirical joint law of (lead at the first jumper after the target time,
// target-is-jumper); shares the sampler with simulate_target_violation.
struct LeadSample {
    std::vector<double> f3;  // P(lead = n, jumper), n <= max_n
    std::vector<double> f4;
    std::uint64_t runs = 0;
    double jumper_fraction = 0.0;
    double jumper_fraction_se = 0.0;
};
LeadSample sample_lead_joint(const ProtocolParams& params, std::uint64_t runs,
                             std::uint64_t seed, int max_n, int warmup_jumpers = 10000,
                             int threads = 0);

// Empirical pmf of the supremum of the race between adversarial arrivals and
// the jumper renewal process (stopped once the jumpers lead by cutoff).
std::vector<double> estimate_m_pmf(const ProtocolParams& params, std::uint64_t runs,
                                   std::uint64_t seed, int max_i, int cutoff,
                                   int threads = 0);

// Empirical pmf of the adversarial-branch gain across one delay window at
// lag l.
std::vector<double> estimate_w_given_l(const ProtocolParams& params, int l,
                                       std::uint64_t runs, std::uint64_t seed, int max_w,
                                       int threads = 0);

// Replays identical arrival streams through the block tree and the compact
// state under one policy and compares violation verdicts (and reduced
// states) step by step.
struct ReplayReport {
    std::uint64_t streams = 0;
    std::uint64_t divergences = 0;
    std::string first_divergence_trace;  // empty when clean
};
ReplayReport tree_vs_compact_check(const ProtocolParams& params, PolicyKind policy,
                                   std::uint64_t streams, int horizon, std::uint64_t seed);

}  // namespace powrace
