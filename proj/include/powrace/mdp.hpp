#pragma once

#include <string>
#include <vector>

#include "powrace/compact_state.hpp"
#include "powrace/params.hpp"
#include "powrace/policies.hpp"

namespace powrace {

struct ValueBracket {
    double lo = 0.0;
    double hi = 1.0;

    double width() const { return hi - lo; }
    bool overlaps(const ValueBracket& o) const { return lo <= o.hi && o.lo <= hi; }
};

struct ZeroDelayCaps {
    // Deficit d - m beyond which states are pinned to the certified bracket
    // [0, rho^deficit_cap]. 0 = auto-size so the pin is below 1e-9.
    int deficit_cap = 0;
    // Cap on the branch gap n - m; validated by cap doubling in tests.
    int gap_cap = 0;
};

struct SweepStats {
    int sweeps = 0;
    double residual = 0.0;
};

struct PrescriptionReport {
    // One line per (arrival, state-class) bucket.
    struct Line {
        std::string description;
        long states = 0;
        long confirmed = 0;
        long excluded = 0;     // prescription provably outside the argmax set
        long undecidable = 0;  // brackets too wide to certify either way
    };
    std::vector<Line> lines;
    bool all_confirmed() const;
};

// Exact finite dynamic program for the zero-delay race.
//
// Collapsed coordinates: mc = min(m, k), x = d - m, y = n - m. The violation
// predicate m >= max(k, d) and every admissible transition depend on (m,d,n)
// only through these (m past k matters only via x). States with x >=
// deficit_cap carry the certified bracket [0, rho^x]; y is clamped at
// gap_cap.
class ZeroDelayModel {
public:
    ZeroDelayModel(const ProtocolParams& params, ZeroDelayCaps caps = {});

    const ZeroDelayCaps& caps() const { return caps_; }

    // Bellman value iteration to the optimal bracket.
    SweepStats solve_optimal(double tol = 1e-13, int max_sweeps = 100000);

    // Value of a fixed stationary policy on the same truncated space.
    SweepStats solve_policy(PolicyKind policy, double tol = 1e-13, int max_sweeps = 100000);

    ValueBracket genesis_value() const { return value(0, 0, 0, Arrival::None); }

    // Raw-coordinate lookup (collapses internally). Requires m <= n, d <= n.
    ValueBracket value(int m, int d, int n, Arrival arrival) const;

    // Checks the prescribed optimal actions against the computed argmax sets
    // over the candidate action set on every in-range state.
    PrescriptionReport verify_prescriptions() const;

private:
    struct Successor {
        enum class Kind : std::uint8_t { State, Violation, DeficitPin } kind;
        int mc = 0, x = 0, y = 0;
        Arrival plane = Arrival::None;
    };

    int k_;
    double beta_;
    ZeroDelayCaps caps_;
    double pin_hi_;  // rho^deficit_cap
    int x_lo_;
    int nx_, ny_;
    std::vector<double> lo_, hi_;  // indexed by (plane, mc, x, y)
    bool solved_ = false;

    std::size_t index(int plane, int mc, int x, int y) const;
    bool in_range(int mc, int x, int y) const;
    bool violating(int mc, int x) const { return mc >= k_ && x <= 0; }

    ValueBracket lookup(const Successor& s) const;
    Successor make_successor(int mc, int x, int y, Arrival plane) const;
    Successor apply(int mc, int x, int y, Arrival plane, const ActionKind& a) const;
    std::vector<ActionKind> candidates(int mc, int x, int y, Arrival plane) const;
    ActionKind prescribed(int mc, int x, int y, Arrival plane, PolicyKind policy) const;

    template <class Chooser>
    SweepStats sweep_to_fixpoint(double tol, int max_sweeps, Chooser&& choose);
};

}  // namespace powrace
