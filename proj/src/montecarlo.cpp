#include "powrace/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>
#include <vector>

#include "powrace/height1.hpp"
#include "powrace/rng.hpp"

namespace powrace {

namespace {

int worker_count(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::max(1u, std::min(hw, 16u)));
}

// Runs fn(run_index, per-run rng) over all runs; the sum of outcomes does not
// depend on the worker count because every run owns its (seed, index) stream.
template <class Fn>
std::uint64_t parallel_successes(std::uint64_t runs, std::uint64_t seed, int threads, Fn fn) {
    const int workers = worker_count(threads);
    std::vector<std::uint64_t> partial(static_cast<std::size_t>(workers), 0);
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                std::uint64_t acc = 0;
                for (std::uint64_t r = static_cast<std::uint64_t>(w); r < runs;
                     r += static_cast<std::uint64_t>(workers)) {
                    RunRng rng(seed, r);
                    acc += static_cast<std::uint64_t>(fn(r, rng));
                }
                partial[static_cast<std::size_t>(w)] = acc;
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    std::uint64_t total = 0;
    for (std::uint64_t v : partial) total += v;
    return total;
}

EstimateWithCI finish_estimate(std::uint64_t hits, std::uint64_t runs, std::uint64_t seed,
                               double bias_bound) {
    EstimateWithCI out;
    out.runs = runs;
    out.seed = seed;
    out.bias_bound = bias_bound;
    out.estimate = runs ? static_cast<double>(hits) / static_cast<double>(runs) : 0.0;
    out.std_error =
        runs ? std::sqrt(out.estimate * (1.0 - out.estimate) / static_cast<double>(runs)) : 0.0;
    out.std_error = std::max(out.std_error, 0.0);
    return out;
}

ActionKind pick_action(PolicyKind kind, const Policy* custom, const CompactState& s) {
    switch (kind) {
        case PolicyKind::BaitAndSwitch: return bait_and_switch_action(s);
        case PolicyKind::PrivateMining: return private_mining_action(s);
        case PolicyKind::TargetBaitAndSwitch: return target_bait_and_switch_action(s);
        case PolicyKind::Custom:
            if (!custom) throw std::invalid_argument("custom policy requires a table");
            return custom->action(s);
    }
    throw std::logic_error("unreachable");
}

// Plays the race from `state` until violation or the cutoff deficit.
int run_attack(CompactState& state, const ProtocolParams& p, PolicyKind policy,
               const Policy* custom, int cutoff, RunRng& rng) {
    const double lambda = p.lambda();
    const double beta = p.beta();
    for (;;) {
        if (state.is_violation(p.k)) return 1;
        if (std::max(p.k, state.public_height()) - state.m() >= cutoff) return 0;
        state.advance_time(rng.exponential(lambda));
        state.set_arrival(rng.bernoulli(beta) ? Arrival::A : Arrival::H);
        state.apply_action(pick_action(policy, custom, state), p.delta);
    }
}

double bias_bound_for(const ProtocolParams& params, int cutoff) {
    const RacePmf race = race_pmf(params, params.k + 50);
    if (race.tail_ratio <= 0.0) return 0.0;
    return std::pow(race.tail_ratio, cutoff - params.k);
}

int effective_cutoff(const RunConfig& config) {
    int cutoff = config.cutoff_deficit > 0 ? config.cutoff_deficit : config.params.k + 60;
    if (cutoff < config.params.k)
        throw std::invalid_argument("cutoff deficit must be at least k");
    return cutoff;
}

}  // namespace

EstimateWithCI simulate_violation(const RunConfig& config) {
    const ProtocolParams& p = config.params;
    p.validate();
    p.require_tolerance();
    const int cutoff = effective_cutoff(config);
    const std::uint64_t hits = parallel_successes(
        config.runs, config.seed, config.threads, [&](std::uint64_t, RunRng& rng) {
            CompactState state = CompactState::genesis();
            return run_attack(state, p, config.policy, config.custom_policy, cutoff, rng);
        });
    return finish_estimate(hits, config.runs, config.seed, bias_bound_for(p, cutoff));
}

namespace {

// Pre-mining lead process sampled at jumper renewal points: between
// consecutive jumpers the lead gains the adversarial arrivals of the gap and
// loses one at the jumper (floored at zero).
struct LeadProcess {
    double tau = 0.0;  // last jumper arrival time
    long lead = 0;     // lead right after that jumper

    void step(const ProtocolParams& p, RunRng& rng) {
        const double gap = p.delta + rng.exponential(p.h);
        lead = std::max<long>(0, lead + rng.poisson(p.a * gap) - 1);
        tau += gap;
    }
};

struct TargetDraw {
    int lead = 0;
    bool jumper = true;
};

// Advances the stream past a deterministic inspection time far enough ahead
// for the renewal age to be stationary, then resolves the first honest block
// after it (the target) and the lead at the first jumper after it.
TargetDraw draw_target(LeadProcess& proc, const ProtocolParams& p, RunRng& rng) {
    const double mean_gap = p.delta + 1.0 / p.h;
    const double s = proc.tau + 30.0 * mean_gap;
    double next = proc.tau + p.delta + rng.exponential(p.h);
    while (next <= s) {
        proc.lead = std::max<long>(0, proc.lead + rng.poisson(p.a * (next - proc.tau)) - 1);
        proc.tau = next;
        next = proc.tau + p.delta + rng.exponential(p.h);
    }
    TargetDraw draw;
    if (s < proc.tau + p.delta && s + rng.exponential(p.h) < proc.tau + p.delta) {
        draw.jumper = false;  // an honest block lands before the jumper goes public
    }
    // Lead just before the first jumper after s (time `next`).
    const long lead_at_jumper = proc.lead + rng.poisson(p.a * (next - proc.tau));
    draw.lead = static_cast<int>(lead_at_jumper);
    // The stream continues past that jumper.
    proc.lead = std::max<long>(0, lead_at_jumper - 1);
    proc.tau = next;
    return draw;
}

constexpr int kLeadStreams = 64;

// Stream-sharded sampler: results are independent of the worker count.
template <class PerTarget>
void run_lead_streams(const ProtocolParams& p, std::uint64_t runs, std::uint64_t seed,
                      int warmup, int threads, PerTarget per_target) {
    const int workers = worker_count(threads);
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int stream = w; stream < kLeadStreams; stream += workers) {
                    RunRng rng(seed, 1000000ull + static_cast<std::uint64_t>(stream));
                    LeadProcess proc;
                    for (int i = 0; i < warmup; ++i) proc.step(p, rng);
                    std::uint64_t share = runs / kLeadStreams;
                    if (static_cast<std::uint64_t>(stream) < runs % kLeadStreams) share += 1;
                    for (std::uint64_t r = 0; r < share; ++r) {
                        const TargetDraw draw = draw_target(proc, p, rng);
                        per_target(stream, draw, rng);
                    }
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

EstimateWithCI simulate_target_violation(const RunConfig& config) {
    const ProtocolParams& p = config.params;
    p.validate();
    p.require_tolerance();
    const int cutoff = effective_cutoff(config);
    const int warmup = std::max(1, config.warmup_jumpers);
    std::vector<std::uint64_t> hits(kLeadStreams, 0);
    std::vector<std::uint64_t> counts(kLeadStreams, 0);
    run_lead_streams(p, config.runs, config.seed, warmup, config.threads,
                     [&](int stream, const TargetDraw& draw, RunRng& rng) {
                         CompactState state = place_target(draw.lead, false, draw.jumper, p.delta);
                         const PolicyKind policy = config.policy == PolicyKind::BaitAndSwitch
                                                       ? PolicyKind::TargetBaitAndSwitch
                                                       : config.policy;
                         hits[static_cast<std::size_t>(stream)] += static_cast<std::uint64_t>(
                             run_attack(state, p, policy, config.custom_policy, cutoff, rng));
                         counts[static_cast<std::size_t>(stream)] += 1;
                     });
    std::uint64_t total_hits = 0, total = 0;
    for (int s = 0; s < kLeadStreams; ++s) {
        total_hits += hits[static_cast<std::size_t>(s)];
        total += counts[static_cast<std::size_t>(s)];
    }
    return finish_estimate(total_hits, total, config.seed, bias_bound_for(p, cutoff));
}

LeadSample sample_lead_joint(const ProtocolParams& params, std::uint64_t runs,
                             std::uint64_t seed, int max_n, int warmup_jumpers, int threads) {
    params.validate();
    params.require_tolerance();
    std::vector<std::vector<std::uint64_t>> c3(kLeadStreams), c4(kLeadStreams);
    std::vector<std::uint64_t> jumpers(kLeadStreams, 0);
    for (int s = 0; s < kLeadStreams; ++s) {
        c3[static_cast<std::size_t>(s)].assign(static_cast<std::size_t>(max_n) + 1, 0);
        c4[static_cast<std::size_t>(s)].assign(static_cast<std::size_t>(max_n) + 1, 0);
    }
    run_lead_streams(params, runs, seed, std::max(1, warmup_jumpers), threads,
                     [&](int stream, const TargetDraw& draw, RunRng&) {
                         if (draw.jumper) jumpers[static_cast<std::size_t>(stream)] += 1;
                         if (draw.lead <= max_n) {
                             auto& bucket = draw.jumper ? c3[static_cast<std::size_t>(stream)]
                                                        : c4[static_cast<std::size_t>(stream)];
                             bucket[static_cast<std::size_t>(draw.lead)] += 1;
                         }
                     });
    LeadSample out;
    out.runs = runs;
    out.f3.assign(static_cast<std::size_t>(max_n) + 1, 0.0);
    out.f4.assign(static_cast<std::size_t>(max_n) + 1, 0.0);
    std::uint64_t jumper_total = 0;
    for (int s = 0; s < kLeadStreams; ++s) {
        jumper_total += jumpers[static_cast<std::size_t>(s)];
        for (int n = 0; n <= max_n; ++n) {
            out.f3[static_cast<std::size_t>(n)] +=
                static_cast<double>(c3[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)]);
            out.f4[static_cast<std::size_t>(n)] +=
                static_cast<double>(c4[static_cast<std::size_t>(s)][static_cast<std::size_t>(n)]);
        }
    }
    for (int n = 0; n <= max_n; ++n) {
        out.f3[static_cast<std::size_t>(n)] /= static_cast<double>(runs);
        out.f4[static_cast<std::size_t>(n)] /= static_cast<double>(runs);
    }
    out.jumper_fraction = static_cast<double>(jumper_total) / static_cast<double>(runs);
    out.jumper_fraction_se = std::sqrt(
        std::max(0.0, out.jumper_fraction * (1.0 - out.jumper_fraction)) / static_cast<double>(runs));
    return out;
}

std::vector<double> estimate_m_pmf(const ProtocolParams& params, std::uint64_t runs,
                                   std::uint64_t seed, int max_i, int cutoff, int threads) {
    params.validate();
    params.require_tolerance();
    if (cutoff < 1) throw std::invalid_argument("cutoff must be >= 1");
    std::vector<std::vector<std::uint64_t>> bins(
        static_cast<std::size_t>(worker_count(threads)),
        std::vector<std::uint64_t>(static_cast<std::size_t>(max_i) + 1, 0));
    const int workers = worker_count(threads);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::uint64_t r = static_cast<std::uint64_t>(w); r < runs;
                 r += static_cast<std::uint64_t>(workers)) {
                RunRng rng(seed, r);
                long diff = 0, sup = 0;
                double ta = params.a > 0.0 ? rng.exponential(params.a)
                                           : std::numeric_limits<double>::infinity();
                double tj = params.delta + rng.exponential(params.h);
                while (diff > -static_cast<long>(cutoff)) {
                    if (ta < tj) {
                        diff += 1;
                        sup = std::max(sup, diff);
                        ta += rng.exponential(params.a);
                    } else {
                        diff -= 1;
                        tj += params.delta + rng.exponential(params.h);
                    }
                }
                if (sup <= max_i) bins[static_cast<std::size_t>(w)][static_cast<std::size_t>(sup)] += 1;
            }
        });
    }
    for (std::thread& t : pool) t.join();
    std::vector<double> pmf(static_cast<std::size_t>(max_i) + 1, 0.0);
    for (int w = 0; w < workers; ++w)
        for (int i = 0; i <= max_i; ++i)
            pmf[static_cast<std::size_t>(i)] +=
                static_cast<double>(bins[static_cast<std::size_t>(w)][static_cast<std::size_t>(i)]);
    for (double& v : pmf) v /= static_cast<double>(runs);
    return pmf;
}

std::vector<double> estimate_w_given_l(const ProtocolParams& params, int l,
                                       std::uint64_t runs, std::uint64_t seed, int max_w,
                                       int threads) {
    params.validate();
    const double lambda = params.lambda();
    const double beta = params.beta();
    std::vector<std::uint64_t> bins(static_cast<std::size_t>(max_w) + 1, 0);
    std::mutex merge_mutex;
    const int workers = worker_count(threads);
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            std::vector<std::uint64_t> local(static_cast<std::size_t>(max_w) + 1, 0);
            for (std::uint64_t r = static_cast<std::uint64_t>(w); r < runs;
                 r += static_cast<std::uint64_t>(workers)) {
                RunRng rng(seed, r);
                // Phases: while the branch trails the lag only adversarial
                // arrivals count; at parity the next arrival of either kind
                // counts once; beyond parity adversarial arrivals count.
                int gained = 0;
                int phase = l > 0 ? 0 : (l == 0 ? 1 : 2);
                double t = rng.exponential(lambda);
                while (t < params.delta) {
                    const bool adversarial = rng.bernoulli(beta);
                    if (phase == 0) {
                        if (adversarial) {
                            gained += 1;
                            if (gained == l) phase = 1;
                        }
                    } else if (phase == 1) {
                        gained += 1;
                        phase = 2;
                    } else if (adversarial) {
                        gained += 1;
                    }
                    t += rng.exponential(lambda);
                }
                if (gained <= max_w) local[static_cast<std::size_t>(gained)] += 1;
            }
            std::lock_guard<std::mutex> lock(merge_mutex);
            for (int i = 0; i <= max_w; ++i)
                bins[static_cast<std::size_t>(i)] += local[static_cast<std::size_t>(i)];
        });
    }
    for (std::thread& t : pool) t.join();
    std::vector<double> pmf(static_cast<std::size_t>(max_w) + 1, 0.0);
    for (int i = 0; i <= max_w; ++i)
        pmf[static_cast<std::size_t>(i)] =
            static_cast<double>(bins[static_cast<std::size_t>(i)]) / static_cast<double>(runs);
    return pmf;
}

ReplayReport tree_vs_compact_check(const ProtocolParams& params, PolicyKind policy,
                                   std::uint64_t streams, int horizon, std::uint64_t seed) {
    params.validate();
    ReplayReport report;
    report.streams = streams;
    for (std::uint64_t s = 0; s < streams; ++s) {
        RunRng rng(seed, 2000000ull + s);
        CompactState compact = CompactState::genesis();
        BlockTree tree(params.delta);
        bool diverged = false;
        for (int step = 0; step < horizon && !diverged; ++step) {
            if (compact.is_violation(params.k)) break;  // absorbed; verdicts already matched
            const double dt = rng.exponential(params.lambda());
            compact.advance_time(dt);
            tree.advance_time(dt);
            const Arrival kind = rng.bernoulli(params.beta()) ? Arrival::A : Arrival::H;
            compact.set_arrival(kind);
            const ActionKind action = pick_action(policy, nullptr, compact);

            // Translate the branch-level action into a concrete parent.
            auto [r_high, r_low] = tree.top_branch_roots();
            const int root = action.branch == BranchSide::Higher ? r_high : r_low;
            int parent = 0;
            if (action.height > 1) {
                parent = tree.block_at(root, action.height - 1);
                if (parent < 0) {
                    report.divergences += 1;
                    report.first_divergence_trace = trace_to_string(tree.trace());
                    diverged = true;
                    break;
                }
            }
            tree.add_block(kind == Arrival::A ? BlockKind::A : BlockKind::H, parent);
            compact.apply_action(action, params.delta);

            const bool tree_verdict = tree.violation(params.k);
            const bool compact_verdict = compact.is_violation(params.k);
            const CompactState reduced = tree.to_compact();
            if (tree_verdict != compact_verdict || !reduced.approx_equal(compact, 1e-9)) {
                report.divergences += 1;
                if (report.first_divergence_trace.empty())
                    report.first_divergence_trace = trace_to_string(tree.trace());
                diverged = true;
            }
        }
    }
    return report;
}

}  // namespace powrace
