// powrace: safety-violation probabilities for longest-chain proof-of-work
// consensus under bounded network delay: exact curves, Monte Carlo
// estimators, and a zero-delay optimality verifier.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "powrace/height1.hpp"
#include "powrace/mdp.hpp"
#include "powrace/montecarlo.hpp"
#include "powrace/params.hpp"
#include "powrace/policies.hpp"
#include "powrace/target.hpp"

using json = nlohmann::json;
using namespace powrace;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitTolerance = 3;
constexpr int kExitNumerical = 4;
constexpr int kExitVerification = 5;

// Rates are accepted as rational strings ("1/600") so presets carry no
// decimal drift.
double parse_rate(const std::string& text) {
    const auto slash = text.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument("bad number: " + text);
        return v;
    }
    const double num = std::stod(text.substr(0, slash), &used);
    if (used != slash) throw std::invalid_argument("bad rational: " + text);
    const double den = std::stod(text.substr(slash + 1), &used);
    if (used != text.size() - slash - 1 || den == 0.0)
        throw std::invalid_argument("bad rational: " + text);
    return num / den;
}

struct ParamArgs {
    std::string a, h, lambda, beta, delta;
    std::string preset;
    int k = 0;

    void add_to(CLI::App* cmd, bool with_k = true) {
        cmd->set_help_flag("--help", "print help");  // frees -h for the honest rate
        cmd->add_option("--a", a, "adversarial mining rate, blocks/s (accepts p/q)");
        cmd->add_option("--h", h, "honest mining rate, blocks/s (accepts p/q)");
        cmd->add_option("--lambda", lambda, "total mining rate, blocks/s (accepts p/q)");
        cmd->add_option("--beta", beta, "adversarial fraction of the total rate");
        cmd->add_option("--delta", delta, "propagation delay bound, seconds");
        cmd->add_option("--preset", preset, "parameter preset: bitcoin | etc")
            ->check(CLI::IsMember({"bitcoin", "etc"}));
        if (with_k) cmd->add_option("--k", k, "confirmation depth")->check(CLI::PositiveNumber);
    }

    ProtocolParams resolve(int k_override = 0) const {
        std::string lam = lambda, del = delta;
        if (preset == "bitcoin") {
            if (lam.empty()) lam = "1/600";
            if (del.empty()) del = "10";
        } else if (preset == "etc") {
            if (lam.empty()) lam = "1/13";
            if (del.empty()) del = "2";
        }
        const bool rate_pair = !a.empty() || !h.empty();
        const bool frac_pair = !lam.empty() || !beta.empty();
        if (rate_pair == frac_pair)
            throw CLI::ValidationError(
                "parameters", "provide exactly one of (--a,--h) or (--lambda,--beta)/--preset");
        if (del.empty()) throw CLI::ValidationError("parameters", "--delta is required");
        const int depth = k_override > 0 ? k_override : (k > 0 ? k : 1);
        if (rate_pair) {
            if (a.empty() || h.empty())
                throw CLI::ValidationError("parameters", "--a and --h go together");
            return ProtocolParams::from_rates(parse_rate(a), parse_rate(h), parse_rate(del),
                                              depth);
        }
        if (lam.empty() || beta.empty())
            throw CLI::ValidationError("parameters",
                                       "--lambda/--preset and --beta go together");
        return ProtocolParams::from_fraction(parse_rate(lam), parse_rate(beta),
                                             parse_rate(del), depth);
    }
};

std::ostream& open_output(const std::string& path, std::ofstream& file) {
    if (path.empty() || path == "-") return std::cout;
    file.open(path);
    if (!file) throw std::invalid_argument("cannot open output file: " + path);
    return file;
}

json params_json(const ProtocolParams& p) {
    return json{{"a", p.a},         {"h", p.h},             {"delta", p.delta},
                {"k", p.k},         {"lambda", p.lambda()}, {"beta", p.beta()}};
}

std::uint64_t ensure_seed(std::optional<std::uint64_t> seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

// Expands `--config FILE` into ordinary flags: every key=value line becomes
// "--key value" unless the flag already appears on the command line, so
// explicit flags always win.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    if (it == args.end()) return args;
    if (std::next(it) == args.end())
        throw std::invalid_argument("--config requires a file path");
    const std::string path = *std::next(it);
    std::ifstream file(path);
    if (!file) throw std::invalid_argument("cannot open config file: " + path);

    std::vector<std::string> merged;
    merged.reserve(args.size() + 8);
    for (auto a = args.begin(); a != args.end(); ++a) {
        if (a == it) {
            ++a;  // skip the path as well
            continue;
        }
        merged.push_back(*a);
    }
    std::string line;
    std::vector<std::string> extra;
    while (std::getline(file, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) continue;
        const std::string flag = "--" + key;
        if (std::find(merged.begin(), merged.end(), flag) != merged.end()) continue;
        extra.push_back(flag);
        if (!value.empty()) extra.push_back(value);
    }
    // Config-derived flags go right after the subcommand name.
    merged.insert(merged.empty() ? merged.end() : merged.begin() + 1, extra.begin(),
                  extra.end());
    return merged;
}

int cmd_tradeoff(const ProtocolParams& base, int k_max, const std::string& target,
                 const std::string& format, std::ostream& os) {
    os << std::setprecision(17);
    json rows = json::array();
    const bool general = target == "general";
    if (format == "csv")
        os << (general ? "k,probability,e_tail_bound,lead_truncation\n" : "k,probability\n");
    for (int k = 1; k <= k_max; ++k) {
        const ProtocolParams p = base.with_k(k);
        if (general) {
            const TargetProbability tp = violation_probability_target_detail(p);
            if (format == "csv")
                os << k << ',' << tp.probability << ',' << tp.e_tail_bound << ','
                   << tp.lead_truncation << '\n';
            else
                rows.push_back({{"k", k},
                                {"probability", tp.probability},
                                {"e_tail_bound", tp.e_tail_bound},
                                {"lead_truncation", tp.lead_truncation}});
        } else {
            const double v = violation_probability_height1(p);
            if (format == "csv")
                os << k << ',' << v << '\n';
            else
                rows.push_back({{"k", k}, {"probability", v}});
        }
    }
    if (format == "json") os << rows.dump(2) << '\n';
    return kExitOk;
}

int cmd_pmf(const ProtocolParams& p, int max_i, std::ostream& os) {
    const RacePmf race = race_pmf(p, max_i);
    os << std::setprecision(17);
    os << "# tail_bound=" << race.tail_bound << " tail_ratio=" << race.tail_ratio << '\n';
    os << "i,probability\n";
    for (std::size_t i = 0; i < race.p.size(); ++i) os << i << ',' << race.p[i] << '\n';
    return kExitOk;
}

int cmd_matrices(const ProtocolParams& p, std::ostream& os) {
    const EpochEngine engine(p);
    os << std::setprecision(17);
    os << "j,y";
    for (int yp = 0; yp <= p.k; ++yp) os << ",p_" << yp;
    os << ",row_sum\n";
    for (int j = 1; j <= p.k; ++j) {
        const TransitionMatrix mat = engine.matrix(j);
        for (int y = 0; y <= p.k; ++y) {
            os << j << ',' << y;
            for (int yp = 0; yp <= p.k; ++yp) os << ',' << mat.at(y, yp);
            os << ',' << mat.row_sum(y) << '\n';
        }
    }
    return kExitOk;
}

int cmd_simulate(const ProtocolParams& p, const std::string& policy_name,
                 const std::string& table_path, const std::string& target,
                 std::uint64_t runs, std::uint64_t seed, int cutoff, int warmup, int threads,
                 std::ostream& os) {
    RunConfig config;
    config.params = p;
    config.runs = runs;
    config.seed = seed;
    config.cutoff_deficit = cutoff;
    config.warmup_jumpers = warmup;
    config.threads = threads;
    std::optional<Policy> custom;
    if (!table_path.empty()) {
        custom.emplace(policy_name, PolicyTable::from_csv_file(table_path));
        config.policy = PolicyKind::Custom;
        config.custom_policy = &*custom;
    } else {
        config.policy = policy_kind_from_string(policy_name);
    }
    const bool general = target == "general";
    const EstimateWithCI est =
        general ? simulate_target_violation(config) : simulate_violation(config);
    json out{{"estimate", est.estimate},     {"stderr", est.std_error},
             {"runs", est.runs},             {"seed", est.seed},
             {"bias_bound", est.bias_bound}, {"policy", policy_name},
             {"target", general ? "general" : "height1"},
             {"params", params_json(p)}};
    if (general) out["warmup_jumpers"] = warmup;
    os << out.dump(2) << '\n';
    return kExitOk;
}

int cmd_verify_mdp(const ProtocolParams& p, double tol, std::ostream& os) {
    ZeroDelayModel optimal(p);
    const SweepStats stats = optimal.solve_optimal(tol);
    const ValueBracket genesis = optimal.genesis_value();
    ZeroDelayModel bait(p);
    bait.solve_policy(PolicyKind::BaitAndSwitch, tol);
    const ValueBracket policy_value = bait.genesis_value();
    const PrescriptionReport report = optimal.verify_prescriptions();

    os << std::setprecision(12);
    os << "zero-delay verification (k=" << p.k << ", beta=" << p.beta() << ")\n";
    os << "  sweeps=" << stats.sweeps << " residual=" << stats.residual << '\n';
    os << "  genesis optimal value in [" << genesis.lo << ", " << genesis.hi << "]"
       << " width=" << genesis.width() << '\n';
    os << "  attack policy value   in [" << policy_value.lo << ", " << policy_value.hi << "]\n";
    bool ok = true;
    for (const auto& line : report.lines) {
        os << "  " << line.description << ": states=" << line.states
           << " confirmed=" << line.confirmed << " excluded=" << line.excluded
           << " undecidable=" << line.undecidable << '\n';
        if (line.excluded != 0) ok = false;
    }
    const bool policy_optimal = policy_value.overlaps(genesis);
    os << "  policy bracket overlaps optimal: " << (policy_optimal ? "yes" : "NO") << '\n';
    if (!ok || !policy_optimal) {
        os << "VERIFICATION FAILED\n";
        return kExitVerification;
    }
    os << "all prescriptions verified\n";
    return kExitOk;
}

int cmd_check(const ProtocolParams& base, std::uint64_t runs, std::uint64_t seed, int threads,
              std::ostream& os) {
    os << std::setprecision(10);
    bool ok = true;
    auto report = [&](const std::string& name, bool pass, const std::string& detail) {
        os << (pass ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
        if (!pass) ok = false;
    };

    {
        RunConfig config;
        config.params = base;
        config.policy = PolicyKind::BaitAndSwitch;
        config.runs = runs;
        config.seed = seed;
        config.threads = threads;
        const double analytic = violation_probability_height1(base);
        const EstimateWithCI est = simulate_violation(config);
        const double diff = std::abs(analytic - est.estimate);
        const double gate = 3.0 * est.std_error + est.bias_bound;
        std::ostringstream detail;
        detail << "analytic=" << analytic << " estimate=" << est.estimate << " |diff|=" << diff
               << " gate=" << gate;
        report("height1 analytic vs simulation", diff <= gate, detail.str());
    }
    {
        RunConfig config;
        config.params = base;
        config.policy = PolicyKind::TargetBaitAndSwitch;
        config.runs = runs;
        config.seed = seed + 1;
        config.threads = threads;
        const double analytic = violation_probability_target(base);
        const EstimateWithCI est = simulate_target_violation(config);
        const double diff = std::abs(analytic - est.estimate);
        const double gate = 3.0 * est.std_error + est.bias_bound;
        std::ostringstream detail;
        detail << "analytic=" << analytic << " estimate=" << est.estimate << " |diff|=" << diff
               << " gate=" << gate;
        report("target analytic vs simulation", diff <= gate, detail.str());
    }
    {
        RunConfig config;
        config.params = base;
        config.policy = PolicyKind::BaitAndSwitch;
        config.runs = runs;
        config.seed = seed + 2;
        config.threads = threads;
        const EstimateWithCI bait = simulate_violation(config);
        config.policy = PolicyKind::PrivateMining;
        const EstimateWithCI priv = simulate_violation(config);
        const double combined = std::hypot(bait.std_error, priv.std_error);
        std::ostringstream detail;
        detail << "bait=" << bait.estimate << " private=" << priv.estimate
               << " 3*combined_se=" << 3.0 * combined;
        report("policy dominance", bait.estimate >= priv.estimate - 3.0 * combined,
               detail.str());
    }
    {
        const ProtocolParams zd =
            ProtocolParams::from_fraction(1.0, base.beta(), 0.0, std::min(base.k, 5));
        ZeroDelayModel model(zd);
        model.solve_optimal();
        const ValueBracket v = model.genesis_value();
        const double analytic = violation_probability_height1(zd);
        const bool pass = model.verify_prescriptions().all_confirmed() &&
                          v.lo - 1e-7 <= analytic && analytic <= v.hi + 1e-7;
        std::ostringstream detail;
        detail << "bracket=[" << v.lo << ", " << v.hi << "] analytic=" << analytic;
        report("zero-delay certificate", pass, detail.str());
    }
    {
        const ReplayReport replay =
            tree_vs_compact_check(base, PolicyKind::BaitAndSwitch, 2000, 200, seed + 3);
        std::ostringstream detail;
        detail << replay.streams << " streams, " << replay.divergences << " divergences";
        if (replay.divergences != 0) {
            std::ofstream dump("divergence.trace");
            dump << replay.first_divergence_trace;
            detail << " (first stream written to divergence.trace)";
        }
        report("tree vs compact replay", replay.divergences == 0, detail.str());
    }
    return ok ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Safety-violation probabilities for longest-chain proof-of-work consensus "
                 "under bounded network delay"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);

    std::string output, format = "csv", target = "height1";
    std::string policy_name = "bait-and-switch", table_path;
    std::optional<std::uint64_t> seed;
    std::uint64_t runs = 1000000;
    int k_max = 12, max_i = -1, cutoff = 0, warmup = 10000, threads = 0;
    double tol = 1e-13;

    ParamArgs tradeoff_params, simulate_params, verify_params, pmf_params, matrices_params,
        check_params;

    CLI::App* tradeoff = app.add_subcommand("tradeoff", "confirmation-depth trade-off curve");
    tradeoff_params.add_to(tradeoff, false);
    tradeoff->add_option("--k-max", k_max, "largest confirmation depth")
        ->check(CLI::PositiveNumber);
    tradeoff->add_option("--target", target, "height1 | general")
        ->check(CLI::IsMember({"height1", "general"}));
    tradeoff->add_option("--format", format, "csv | json")
        ->check(CLI::IsMember({"csv", "json"}));
    tradeoff->add_option("--output,-o", output, "output path (default stdout)");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo violation estimate");
    simulate_params.add_to(simulate);
    simulate->add_option("--policy", policy_name,
                         "bait-and-switch | private-mining | target-bait-and-switch");
    simulate->add_option("--policy-table", table_path, "CSV decision table for a custom policy");
    simulate->add_option("--target", target, "height1 | general")
        ->check(CLI::IsMember({"height1", "general"}));
    simulate->add_option("--runs", runs, "number of simulated attacks");
    simulate->add_option("--seed", seed, "RNG seed (generated and reported when omitted)");
    simulate->add_option("--cutoff-deficit", cutoff,
                         "no-violation deficit cutoff (default k+60)");
    simulate->add_option("--warmup", warmup, "warm-up jumpers per stream (general target)");
    simulate->add_option("--threads", threads, "worker threads (0 = hardware)");
    simulate->add_option("--output,-o", output, "output path (default stdout)");

    CLI::App* verify = app.add_subcommand("verify-mdp", "zero-delay optimality certificate");
    verify_params.add_to(verify);
    verify->add_option("--tol", tol, "value-iteration convergence tolerance");

    CLI::App* pmf = app.add_subcommand("pmf", "race supremum pmf dump");
    pmf_params.add_to(pmf);
    pmf->add_option("--max-i", max_i, "truncation index (default k+50)");
    pmf->add_option("--output,-o", output, "output path (default stdout)");

    CLI::App* matrices = app.add_subcommand("matrices", "epoch transition matrix dump");
    matrices_params.add_to(matrices);
    matrices->add_option("--output,-o", output, "output path (default stdout)");

    CLI::App* check = app.add_subcommand("check", "oracle-agreement suite at one point");
    check_params.add_to(check);
    check->add_option("--runs", runs, "runs per estimator");
    check->add_option("--seed", seed, "RNG seed");
    check->add_option("--threads", threads, "worker threads (0 = hardware)");

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        args = merge_config(args);
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    }
    std::reverse(args.begin(), args.end());  // CLI11 vector parse convention
    try {
        app.parse(std::move(args));
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        std::ofstream file;
        if (tradeoff->parsed()) {
            const ProtocolParams base = tradeoff_params.resolve(1);
            return cmd_tradeoff(base, k_max, target, format, open_output(output, file));
        }
        if (simulate->parsed()) {
            const ProtocolParams p = simulate_params.resolve();
            return cmd_simulate(p, policy_name, table_path, target, runs, ensure_seed(seed),
                                cutoff, warmup, threads, open_output(output, file));
        }
        if (verify->parsed()) {
            const ProtocolParams p = verify_params.resolve();
            if (p.delta != 0.0) {
                std::cerr << "verify-mdp requires --delta 0\n";
                return kExitUsage;
            }
            return cmd_verify_mdp(p, tol, std::cout);
        }
        if (pmf->parsed()) {
            const ProtocolParams p = pmf_params.resolve();
            return cmd_pmf(p, max_i > 0 ? max_i : p.k + 50, open_output(output, file));
        }
        if (matrices->parsed()) {
            const ProtocolParams p = matrices_params.resolve();
            return cmd_matrices(p, open_output(output, file));
        }
        if (check->parsed()) {
            const ProtocolParams p = check_params.resolve();
            return cmd_check(p, runs, ensure_seed(seed), threads, std::cout);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const ToleranceError& e) {
        std::cerr << e.what() << '\n';
        return kExitTolerance;
    } catch (const NumericalError& e) {
        std::cerr << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitUsage;
}
