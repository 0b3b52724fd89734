// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "powrace/height1.hpp"
#include "powrace/mdp.hpp"
#include "powrace/montecarlo.hpp"
#include "powrace/params.hpp"
#include "powrace/target.hpp"

using namespace powrace;

namespace {

constexpr std::uint64_t kSeed = 20250809;
constexpr std::uint64_t kMcRuns = 1000000;

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Gate {
    bool ok = true;
    std::ostringstream detail;

    void fail(const std::string& msg) {
        ok = false;
        detail << "\n    " << msg;
    }
};

const std::vector<std::pair<double, double>> kRateGrid = {{1.0 / 600.0, 10.0},
                                                          {1.0 / 13.0, 2.0}};
const std::vector<double> kBetaGrid = {0.1, 0.25, 0.4};

bool criterion1_pgf_normalization(std::string& detail) {
    Gate gate;
    double worst_gap = 0.0, worst_time = 0.0;
    for (double beta : kBetaGrid) {
        for (auto [lambda, delta] : kRateGrid) {
            const auto p = ProtocolParams::from_fraction(lambda, beta, delta, 3);
            if (!p.within_tolerance()) continue;
            const auto start = std::chrono::steady_clock::now();
            const RacePmf race = race_pmf(p, 400);
            const double elapsed = seconds_since(start);
            double sum = 0.0;
            for (double v : race.p) sum += v;
            worst_gap = std::max(worst_gap, 1.0 - sum);
            worst_time = std::max(worst_time, elapsed);
            if (!(sum >= 1.0 - 1e-9 && sum <= 1.0 + 1e-12))
                gate.fail("sum off unity at beta=" + std::to_string(beta));
            if (elapsed >= 1.0) gate.fail("slow point at beta=" + std::to_string(beta));
        }
    }
    std::ostringstream os;
    os << "max |1-sum|=" << worst_gap << ", max time=" << worst_time << "s";
    detail = os.str() + gate.detail.str();
    return gate.ok;
}

bool criterion2_window_normalization(std::string& detail) {
    Gate gate;
    double worst = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (double beta : kBetaGrid) {
        for (auto [lambda, delta] : kRateGrid) {
            const auto p = ProtocolParams::from_fraction(lambda, beta, delta, 3);
            for (int l = -5; l <= 10; ++l) {
                const std::vector<double> row = window_gain_row(p, l, 200);
                double sum = 0.0;
                for (double v : row) sum += v;
                worst = std::max(worst, std::abs(1.0 - sum));
                if (std::abs(1.0 - sum) > 1e-9)
                    gate.fail("row off unity at l=" + std::to_string(l));
            }
        }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 5.0) gate.fail("normalization sweep too slow");
    std::ostringstream os;
    os << "max |1-sum|=" << worst << ", total time=" << elapsed << "s";
    detail = os.str() + gate.detail.str();
    return gate.ok;
}

struct McPoint {
    int k;
    double beta;
    EstimateWithCI bait;
    EstimateWithCI priv;
    double analytic;
};

std::vector<McPoint> run_height1_grid(double delta) {
    std::vector<McPoint> out;
    for (double beta : {0.1, 0.25}) {
        for (int k = 1; k <= 6; ++k) {
            const auto p = ProtocolParams::from_fraction(1.0 / 600.0, beta, delta, k);
            McPoint point;
            point.k = k;
            point.beta = beta;
            point.analytic = violation_probability_height1(p);
            RunConfig config;
            config.params = p;
            config.runs = kMcRuns;
            config.seed = kSeed + static_cast<std::uint64_t>(k * 100 + int(beta * 100));
            config.policy = PolicyKind::BaitAndSwitch;
            point.bait = simulate_violation(config);
            config.policy = PolicyKind::PrivateMining;
            point.priv = simulate_violation(config);
            out.push_back(point);
        }
    }
    return out;
}

bool criterion3_height1_agreement(const std::vector<McPoint>& grid, std::string& detail) {
    Gate gate;
    double worst_sigma = 0.0;
    for (const McPoint& pt : grid) {
        const double sigma =
            std::abs(pt.analytic - pt.bait.estimate) / std::max(pt.bait.std_error, 1e-12);
        worst_sigma = std::max(worst_sigma, sigma);
        if (std::abs(pt.analytic - pt.bait.estimate) >
            3.0 * pt.bait.std_error + pt.bait.bias_bound) {
            std::ostringstream os;
            os << "k=" << pt.k << " beta=" << pt.beta << " analytic=" << pt.analytic
               << " estimate=" << pt.bait.estimate << " se=" << pt.bait.std_error;
            gate.fail(os.str());
        }
    }
    std::ostringstream os;
    os << "12 points, worst deviation " << worst_sigma << " sigma";
    detail = os.str() + gate.detail.str();
    return gate.ok;
}

bool criterion4_target_agreement(std::string& detail) {
    Gate gate;
    double worst_sigma = 0.0, worst_shift = 0.0;
    for (double beta : {0.1, 0.25}) {
        for (int k = 1; k <= 6; ++k) {
            const auto p = ProtocolParams::from_fraction(1.0 / 600.0, beta, 10.0, k);
            const double analytic = violation_probability_target(p);
            RunConfig config;
            config.params = p;
            config.policy = PolicyKind::TargetBaitAndSwitch;
            config.runs = kMcRuns;
            config.seed = kSeed + 7000 + static_cast<std::uint64_t>(k * 100 + int(beta * 100));
            config.warmup_jumpers = 10000;
            const EstimateWithCI est = simulate_target_violation(config);
            const double sigma =
                std::abs(analytic - est.estimate) / std::max(est.std_error, 1e-12);
            worst_sigma = std::max(worst_sigma, sigma);
            if (std::abs(analytic - est.estimate) > 3.0 * est.std_error + est.bias_bound) {
                std::ostringstream os;
                os << "k=" << k << " beta=" << beta << " analytic=" << analytic
                   << " estimate=" << est.estimate << " se=" << est.std_error;
                gate.fail(os.str());
            }
            config.warmup_jumpers = 20000;
            const EstimateWithCI doubled = simulate_target_violation(config);
            const double combined = std::hypot(est.std_error, doubled.std_error);
            const double shift = std::abs(est.estimate - doubled.estimate);
            worst_shift = std::max(worst_shift, shift / std::max(combined, 1e-12));
            if (shift > combined) {
                std::ostringstream os;
                os << "warm-up doubling shifted k=" << k << " beta=" << beta << " by " << shift
                   << " (> " << combined << ")";
                gate.fail(os.str());
            }
        }
    }
    std::ostringstream os;
    os << "12 points, worst deviation " << worst_sigma << " sigma, worst warm-up shift "
       << worst_shift << " se";
    detail = os.str() + gate.detail.str();
    return gate.ok;
}

bool criterion5_zero_delay_certificate(std::string& detail) {
    Gate gate;
    double worst_width = 0.0, worst_gap = 0.0;
    const auto start = std::chrono::steady_clock::now();
    for (double beta : kBetaGrid) {
        for (int k = 1; k <= 5; ++k) {
            const auto p = ProtocolParams::from_fraction(1.0, beta, 0.0, k);
            ZeroDelayModel optimal(p);
            optimal.solve_optimal();
            const ValueBracket vo = optimal.genesis_value();
            worst_width = std::max(worst_width, vo.width());
            if (vo.width() >= 1e-8)
                gate.fail("bracket too wide at beta=" + std::to_string(beta) +
                          " k=" + std::to_string(k));

            ZeroDelayModel bait(p);
            bait.solve_policy(PolicyKind::BaitAndSwitch);
            if (!bait.genesis_value().overlaps(vo))
                gate.fail("policy bracket misses optimal at beta=" + std::to_string(beta) +
                          " k=" + std::to_string(k));

            const PrescriptionReport report = optimal.verify_prescriptions();
            for (const auto& line : report.lines)
                if (line.excluded != 0)
                    gate.fail("prescription excluded in: " + line.description);

            const double analytic = violation_probability_height1(p);
            const double gap = std::max(vo.lo - analytic, analytic - vo.hi);
            worst_gap = std::max(worst_gap, gap);
            if (gap > 1e-7)
                gate.fail("analytic value misses bracket at beta=" + std::to_string(beta) +
                          " k=" + std::to_string(k));
        }
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 30.0) gate.fail("certificate too slow");
    std::ostringstream os;
    os << "15 points, max width " << worst_width << ", max analytic gap " << worst_gap << ", "
       << elapsed << "s";
    detail = os.str() + gate.detail.str();
    return gate.ok;
}

bool criterion6_dominance(const std::vector<McPoint>& delayed, std::string& detail) {
    Gate gate;
    double worst_margin = 1.0;
    for (const McPoint& pt : delayed) {
        const double combined = std::hypot(pt.bait.std_error, pt.priv.std_error);
        const double margin = pt.bait.estimate - pt.priv.estimate;
        worst_margin = std::min(worst_margin, margin);
        if (margin < -3.0 * combined) {
            std::ostringstream os;
            os << "dominance failed at k=" << pt.k << " beta=" << pt.beta;
            gate.fail(os.str());
        }
    }
    // At zero delay the two policies coincide.
    double worst_zero_sigma = 0.0;
    for (const McPoint& pt : run_height1_grid(0.0)) {
        const double combined = std::hypot(pt.bait.std_error, pt.priv.std_error);
        const double gap = std::abs(pt.bait.estimate - pt.priv.estimate);
        worst_zero_sigma = std::max(worst_zero_sigma, gap / std::max(combined, 1e-12));
        if (gap > 3.0 * combined) {
            std::ostringstream os;
            os << "zero-delay equivalence failed at k=" << pt.k << " beta=" << pt.beta;
            gate.fail(os.str());
        }
    }
    std::ostringstream os;
    os << "min delayed margin " << worst_margin << ", worst zero-delay gap "
       << worst_zero_sigma << " sigma";
    detail = os.str() + gate.detail.str();
    return gate.ok;
}

bool criterion7_monotonicity(std::string& detail) {
    Gate gate;
    for (auto [lambda, delta] : kRateGrid) {
        for (double beta : kBetaGrid) {
            double prev = 2.0;
            for (int k = 1; k <= 12; ++k) {
                const double v = violation_probability_height1(
                    ProtocolParams::from_fraction(lambda, beta, delta, k));
                if (!(v < prev))
                    gate.fail("not decreasing in k at beta=" + std::to_string(beta));
                prev = v;
            }
        }
        for (int k : {2, 6}) {
            double prev = -1.0;
            for (double beta : kBetaGrid) {
                const double v = violation_probability_height1(
                    ProtocolParams::from_fraction(lambda, beta, delta, k));
                if (v + 1e-15 < prev)
                    gate.fail("not non-decreasing in beta at k=" + std::to_string(k));
                prev = v;
            }
        }
    }
    // Delay sweep at fixed rates.
    for (double beta : kBetaGrid) {
        for (int k : {2, 6}) {
            const double a = beta / 600.0, h = (1.0 - beta) / 600.0;
            double prev = -1.0;
            for (double delta : {0.0, 2.0, 10.0}) {
                const double v =
                    violation_probability_height1(ProtocolParams::from_rates(a, h, delta, k));
                if (v + 1e-15 < prev)
                    gate.fail("not non-decreasing in delta at beta=" + std::to_string(beta));
                prev = v;
            }
        }
    }
    detail = "k strictly down, beta and delta up across the grid" + gate.detail.str();
    return gate.ok;
}

bool criterion8_representation(std::string& detail) {
    Gate gate;
    const auto bitcoin = ProtocolParams::from_fraction(1.0 / 600.0, 0.25, 10.0, 3);
    const ReplayReport r1 =
        tree_vs_compact_check(bitcoin, PolicyKind::BaitAndSwitch, 10000, 200, kSeed + 31);
    if (r1.divergences != 0) gate.fail("delayed replay diverged");
    const auto instant = ProtocolParams::from_fraction(1.0, 0.3, 0.0, 3);
    const ReplayReport r2 =
        tree_vs_compact_check(instant, PolicyKind::BaitAndSwitch, 10000, 200, kSeed + 32);
    if (r2.divergences != 0) gate.fail("zero-delay replay diverged");
    std::ostringstream os;
    os << (r1.streams + r2.streams) << " streams, " << (r1.divergences + r2.divergences)
       << " divergences";
    detail = os.str() + gate.detail.str();
    return gate.ok;
}

bool criterion9_complexity(std::string& detail) {
    Gate gate;
    const auto start = std::chrono::steady_clock::now();
    double last = 0.0;
    for (int k = 1; k <= 50; ++k) {
        last = violation_probability_height1(
            ProtocolParams::from_fraction(1.0 / 600.0, 0.25, 10.0, k));
    }
    const double elapsed = seconds_since(start);
    if (elapsed >= 10.0) gate.fail("k<=50 sweep too slow");
    std::ostringstream os;
    os << "k=1..50 curve in " << elapsed << "s (tail value " << last << ")";
    detail = os.str() + gate.detail.str();
    return gate.ok;
}

}  // namespace

int main() {
    std::cout.setf(std::ios::fixed);
    std::cout.precision(6);
    int failures = 0;
    const auto announce = [&](int index, const std::string& name, bool ok,
                              const std::string& detail) {
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << index << " (" << name
                  << "): " << detail << '\n'
                  << std::flush;
        if (!ok) ++failures;
    };

    std::string detail;
    bool ok = criterion1_pgf_normalization(detail);
    announce(1, "race pmf normalization", ok, detail);
    ok = criterion2_window_normalization(detail);
    announce(2, "window pmf normalization", ok, detail);

    const std::vector<McPoint> grid = run_height1_grid(10.0);
    ok = criterion3_height1_agreement(grid, detail);
    announce(3, "height-1 analytic vs Monte Carlo", ok, detail);
    ok = criterion4_target_agreement(detail);
    announce(4, "target analytic vs Monte Carlo", ok, detail);
    ok = criterion5_zero_delay_certificate(detail);
    announce(5, "zero-delay optimality certificate", ok, detail);
    ok = criterion6_dominance(grid, detail);
    announce(6, "policy dominance", ok, detail);
    ok = criterion7_monotonicity(detail);
    announce(7, "monotonicity", ok, detail);
    ok = criterion8_representation(detail);
    announce(8, "tree vs compact representation", ok, detail);
    ok = criterion9_complexity(detail);
    announce(9, "pipeline complexity", ok, detail);

    if (failures == 0) {
        std::cout << "acceptance: all criteria passed\n";
    } else {
        std::cout << "acceptance: " << failures << " criteria FAILED\n";
    }
    return failures == 0 ? 0 : 1;
}
