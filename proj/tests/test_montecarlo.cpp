#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "powrace/height1.hpp"
#include "powrace/mdp.hpp"
#include "powrace/montecarlo.hpp"
#include "powrace/target.hpp"

using namespace powrace;

namespace {

RunConfig config_for(const ProtocolParams& p, PolicyKind policy, std::uint64_t runs,
                     std::uint64_t seed) {
    RunConfig c;
    c.params = p;
    c.policy = policy;
    c.runs = runs;
    c.seed = seed;
    return c;
}

bool within_sigmas(double value, const EstimateWithCI& est, double sigmas) {
    return std::abs(value - est.estimate) <= sigmas * est.std_error + est.bias_bound + 1e-12;
}

}  // namespace

TEST_CASE("identical seed and config reproduce bit-identically across thread counts") {
    const auto p = ProtocolParams::from_fraction(1.0 / 600.0, 0.25, 10.0, 2);
    RunConfig c = config_for(p, PolicyKind::BaitAndSwitch, 20000, 42);
    c.threads = 1;
    const EstimateWithCI serial = simulate_violation(c);
    c.threads = 4;
    const EstimateWithCI parallel = simulate_violation(c);
    CHECK(serial.estimate == parallel.estimate);
    CHECK(serial.std_error == parallel.std_error);

    RunConfig t = c;
    t.runs = 5000;
    t.threads = 1;
    const EstimateWithCI ts = simulate_target_violation(t);
    t.threads = 3;
    const EstimateWithCI tp = simulate_target_violation(t);
    CHECK(ts.estimate == tp.estimate);
}

TEST_CASE("no adversary at zero delay never violates") {
    const auto p = ProtocolParams::from_rates(0.0, 0.5, 0.0, 2);
    const EstimateWithCI est = simulate_violation(config_for(p, PolicyKind::BaitAndSwitch, 5000, 7));
    CHECK(est.estimate == 0.0);
    CHECK(est.std_error == 0.0);
    CHECK(est.bias_bound == 0.0);
}

TEST_CASE("honest-only forks at positive delay match the closed form") {
    // With a = 0 the attack still wins the propagation window k times in
    // a row with probability (1 - e^{-h delta})^k.
    const auto p = ProtocolParams::from_rates(0.0, 1.0 / 50.0, 10.0, 2);
    const double expect = std::pow(1.0 - std::exp(-p.h * p.delta), p.k);
    const EstimateWithCI est =
        simulate_violation(config_for(p, PolicyKind::BaitAndSwitch, 200000, 11));
    CHECK_MESSAGE(within_sigmas(expect, est, 3.0), est.estimate, " vs ", expect);
}

TEST_CASE("height-1 estimate agrees with the analytic value") {
    const auto p = ProtocolParams::from_fraction(1.0 / 600.0, 0.25, 10.0, 2);
    const double analytic = violation_probability_height1(p);
    const EstimateWithCI est =
        simulate_violation(config_for(p, PolicyKind::BaitAndSwitch, 200000, 1234));
    CHECK_MESSAGE(within_sigmas(analytic, est, 3.0), est.estimate, " vs ", analytic);
    CHECK(est.bias_bound < 0.1 * est.std_error);
}

TEST_CASE("zero-delay estimate agrees with the dynamic program") {
    const auto p = ProtocolParams::from_fraction(1.0, 0.25, 0.0, 2);
    ZeroDelayModel model(p);
    model.solve_optimal();
    const double dp = 0.5 * (model.genesis_value().lo + model.genesis_value().hi);
    const EstimateWithCI est =
        simulate_violation(config_for(p, PolicyKind::BaitAndSwitch, 200000, 99));
    CHECK_MESSAGE(within_sigmas(dp, est, 3.0), est.estimate, " vs ", dp);
}

TEST_CASE("bait-and-switch dominates private mining") {
    const auto p = ProtocolParams::from_fraction(1.0 / 600.0, 0.25, 10.0, 3);
    const EstimateWithCI bait =
        simulate_violation(config_for(p, PolicyKind::BaitAndSwitch, 150000, 5));
    const EstimateWithCI priv =
        simulate_violation(config_for(p, PolicyKind::PrivateMining, 150000, 5));
    const double combined = std::hypot(bait.std_error, priv.std_error);
    CHECK(bait.estimate >= priv.estimate - 3.0 * combined);
}

TEST_CASE("bait-and-switch dominates the bundled greedy heuristic") {
    const char* csv =
        "class,arrival,ld_zero,m_eq_n,d_le_m,branch,height_expr\n"
        "*,A,*,*,*,higher,n+1\n"
        "*,H,0,*,*,higher,d\n"
        "*,H,1,*,*,higher,d+1\n";
    std::istringstream is(csv);
    const Policy greedy("greedy-front", PolicyTable::from_csv(is));
    const auto p = ProtocolParams::from_fraction(1.0 / 13.0, 0.25, 2.0, 3);
    RunConfig config = config_for(p, PolicyKind::Custom, 100000, 23);
    config.custom_policy = &greedy;
    const EstimateWithCI heuristic = simulate_violation(config);
    const EstimateWithCI bait =
        simulate_violation(config_for(p, PolicyKind::BaitAndSwitch, 100000, 23));
    const double combined = std::hypot(bait.std_error, heuristic.std_error);
    CHECK(bait.estimate >= heuristic.estimate - 3.0 * combined);
}

TEST_CASE("policies coincide at zero delay") {
    const auto p = ProtocolParams::from_fraction(1.0, 0.3, 0.0, 3);
    const EstimateWithCI bait =
        simulate_violation(config_for(p, PolicyKind::BaitAndSwitch, 150000, 21));
    const EstimateWithCI priv =
        simulate_violation(config_for(p, PolicyKind::PrivateMining, 150000, 21));
    const double combined = std::hypot(bait.std_error, priv.std_error);
    CHECK(std::abs(bait.estimate - priv.estimate) <= 3.0 * combined);
}

TEST_CASE("race supremum histogram matches the analytic pmf") {
    const auto p = ProtocolParams::from_fraction(1.0 / 600.0, 0.25, 10.0, 3);
    const std::uint64_t runs = 200000;
    const std::vector<double> empirical = estimate_m_pmf(p, runs, 31, 8, p.k + 60);
    const RacePmf race = race_pmf(p, 8);
    for (int i = 0; i <= 8; ++i) {
        const double expect = race.p[static_cast<std::size_t>(i)];
        if (expect * static_cast<double>(runs) < 100.0) continue;
        const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(runs));
        CHECK_MESSAGE(std::abs(empirical[static_cast<std::size_t>(i)] - expect) <= 3.0 * se,
                      "bin ", i);
    }
    // No adversary: all mass at zero.
    const auto p0 = ProtocolParams::from_rates(0.0, 0.01, 10.0, 3);
    const std::vector<double> trivial = estimate_m_pmf(p0, 2000, 3, 4, 8);
    CHECK(trivial[0] == 1.0);
}

TEST_CASE("window gain histogram matches the analytic pmf") {
    const auto p = ProtocolParams::from_fraction(1.0 / 13.0, 0.4, 2.0, 3);
    const std::uint64_t runs = 200000;
    for (int l : {-1, 0, 2}) {
        const std::vector<double> empirical = estimate_w_given_l(p, l, runs, 17, 8);
        const std::vector<double> analytic = window_gain_row(p, l, 8);
        for (int w = 0; w <= 8; ++w) {
            const double expect = analytic[static_cast<std::size_t>(w)];
            if (expect * static_cast<double>(runs) < 100.0) continue;
            const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(runs));
            CHECK_MESSAGE(std::abs(empirical[static_cast<std::size_t>(w)] - expect) <= 3.0 * se,
                          "l=", l, " w=", w);
        }
    }
    // Degenerate window: no adversarial rate and a lag below parity.
    const auto p0 = ProtocolParams::from_rates(0.0, 0.01, 10.0, 3);
    const std::vector<double> point = estimate_w_given_l(p0, -1, 2000, 3, 4);
    CHECK(point[0] == 1.0);
    // At parity the empty-window mass is e^{-lambda delta}.
    const std::vector<double> parity = estimate_w_given_l(p, 0, runs, 19, 4);
    const double expect0 = std::exp(-p.lambda() * p.delta);
    const double se0 = std::sqrt(expect0 * (1.0 - expect0) / static_cast<double>(runs));
    CHECK(std::abs(parity[0] - expect0) <= 3.0 * se0);
}

TEST_CASE("target estimate agrees with the analytic target probability") {
    const auto p = ProtocolParams::from_fraction(1.0 / 600.0, 0.25, 10.0, 2);
    const double analytic = violation_probability_target(p);
    RunConfig c = config_for(p, PolicyKind::TargetBaitAndSwitch, 150000, 77);
    c.warmup_jumpers = 2000;
    const EstimateWithCI est = simulate_target_violation(c);
    CHECK_MESSAGE(within_sigmas(analytic, est, 3.0), est.estimate, " vs ", analytic);
}

TEST_CASE("sampled lead law agrees with the joint pmf") {
    const auto p = ProtocolParams::from_fraction(1.0 / 13.0, 0.25, 2.0, 3);
    const std::uint64_t runs = 150000;
    const LeadSample sample = sample_lead_joint(p, runs, 13, 6, 2000);
    const LeadJointPmf joint = lead_joint_pmf(p, 6);
    // The sampled fraction covers every lead, so compare against a deep
    // truncation of the analytic law.
    const double jumper_mass = lead_joint_pmf(p, 60).jumper_mass();
    CHECK(std::abs(sample.jumper_fraction - jumper_mass) <= 3.0 * sample.jumper_fraction_se);
    for (int n = 0; n <= 6; ++n) {
        for (bool jumper : {true, false}) {
            const double expect = jumper ? joint.f3[static_cast<std::size_t>(n)]
                                         : joint.f4[static_cast<std::size_t>(n)];
            const double got = jumper ? sample.f3[static_cast<std::size_t>(n)]
                                      : sample.f4[static_cast<std::size_t>(n)];
            if (expect * static_cast<double>(runs) < 100.0) continue;
            const double se = std::sqrt(expect * (1.0 - expect) / static_cast<double>(runs));
            CHECK_MESSAGE(std::abs(got - expect) <= 3.0 * se, "n=", n, " jumper=", jumper);
        }
    }
}

TEST_CASE("tree and compact replay never diverge") {
    const auto bitcoin = ProtocolParams::from_fraction(1.0 / 600.0, 0.25, 10.0, 3);
    const ReplayReport r1 =
        tree_vs_compact_check(bitcoin, PolicyKind::BaitAndSwitch, 2000, 200, 3);
    CHECK(r1.divergences == 0);
    CHECK(r1.first_divergence_trace.empty());

    const auto instant = ProtocolParams::from_fraction(1.0, 0.3, 0.0, 3);
    const ReplayReport r2 =
        tree_vs_compact_check(instant, PolicyKind::BaitAndSwitch, 2000, 200, 4);
    CHECK(r2.divergences == 0);

    // Private mining stays in lockstep at zero delay as well.
    const ReplayReport r3 =
        tree_vs_compact_check(instant, PolicyKind::PrivateMining, 1000, 200, 5);
    CHECK(r3.divergences == 0);
}

TEST_CASE("out-of-tolerance simulation is rejected") {
    const auto p = ProtocolParams::from_fraction(1.0 / 600.0, 0.49, 900.0, 2);
    CHECK_THROWS_AS(simulate_violation(config_for(p, PolicyKind::BaitAndSwitch, 10, 1)),
                    ToleranceError);
}
