#include "powrace/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace powrace {

bool PrescriptionReport::all_confirmed() const {
    for (const Line& line : lines)
        if (line.excluded != 0) return false;
    return true;
}

ZeroDelayModel::ZeroDelayModel(const ProtocolParams& params, ZeroDelayCaps caps)
    : k_(params.k), beta_(params.beta()), caps_(caps) {
    params.validate();
    if (params.delta != 0.0)
        throw std::invalid_argument("zero-delay model requires delta == 0");
    params.require_tolerance();  // beta < 1/2, so the deficit walk drifts up

    const double rho = beta_ > 0.0 ? beta_ / (1.0 - beta_) : 0.0;
    if (caps_.deficit_cap <= 0) {
        int cap = k_ + 40;
        if (rho > 0.0) cap = std::max(cap, static_cast<int>(std::ceil(std::log(1e-9) / std::log(rho))));
        caps_.deficit_cap = cap;
    }
    if (caps_.gap_cap <= 0) caps_.gap_cap = k_ + caps_.deficit_cap + 2;
    pin_hi_ = rho > 0.0 ? std::pow(rho, caps_.deficit_cap) : 0.0;

    x_lo_ = -k_;
    nx_ = caps_.deficit_cap - x_lo_;      // x in [x_lo_, deficit_cap)
    ny_ = caps_.gap_cap + 1;              // y in [0, gap_cap]
    const std::size_t total = static_cast<std::size_t>(3) * (k_ + 1) * nx_ * ny_;
    lo_.assign(total, 0.0);
    hi_.assign(total, 1.0);
}

std::size_t ZeroDelayModel::index(int plane, int mc, int x, int y) const {
    return ((static_cast<std::size_t>(plane) * (k_ + 1) + mc) * nx_ + (x - x_lo_)) * ny_ + y;
}

bool ZeroDelayModel::in_range(int mc, int x, int y) const {
    if (mc < 0 || mc > k_) return false;
    if (x < x_lo_ || x >= caps_.deficit_cap) return false;
    if (y < 0 || y > caps_.gap_cap) return false;
    if (x < -mc) return false;          // d >= 0
    if (y < std::max(x, 0)) return false;  // n >= d and n >= m
    return true;
}

ValueBracket ZeroDelayModel::lookup(const Successor& s) const {
    switch (s.kind) {
        case Successor::Kind::Violation: return {1.0, 1.0};
        case Successor::Kind::DeficitPin: return {0.0, pin_hi_};
        case Successor::Kind::State: break;
    }
    const int plane = s.plane == Arrival::None ? 0 : (s.plane == Arrival::A ? 1 : 2);
    const std::size_t i = index(plane, s.mc, s.x, s.y);
    return {lo_[i], hi_[i]};
}

ZeroDelayModel::Successor ZeroDelayModel::make_successor(int mc, int x, int y,
                                                         Arrival plane) const {
    Successor s{Successor::Kind::State, mc, std::min(x, caps_.deficit_cap),
                std::min(y, caps_.gap_cap), plane};
    if (violating(s.mc, s.x)) {
        s.kind = Successor::Kind::Violation;
    } else if (s.x >= caps_.deficit_cap) {
        s.kind = Successor::Kind::DeficitPin;
    }
    return s;
}

// Zero-delay transitions in collapsed coordinates (mc = min(m,k), x = d-m,
// y = n-m). Successors land in the chance plane.
ZeroDelayModel::Successor ZeroDelayModel::apply(int mc, int x, int y, Arrival plane,
                                                const ActionKind& a) const {
    const bool extend_lower = a.branch == BranchSide::Lower;
    if (plane == Arrival::A) {
        if (extend_lower && y > 0)  // lower tip: m+1
            return make_successor(std::min(mc + 1, k_), x - 1, y - 1, Arrival::None);
        // higher tip (or the equal-height swap, which coincides with it)
        return make_successor(mc, x, y + 1, Arrival::None);
    }
    // H-arrival.
    if (extend_lower && y > 0)  // bait: m+1 becomes the new public tip
        return make_successor(std::min(mc + 1, k_), 0, y - 1, Arrival::None);
    if (a.height == 2) {  // encodes the n+1 placement, see candidates()
        return make_successor(mc, y + 1, y + 1, Arrival::None);
    }
    // d+1 on the public front
    return make_successor(mc, x + 1, std::max(x + 1, y), Arrival::None);
}

// Candidate actions, deduplicated: height 1 encodes d+1 (on the public
// front), height 2 encodes n+1; the lower placement is m+1.
std::vector<ActionKind> ZeroDelayModel::candidates(int mc, int x, int y, Arrival plane) const {
    std::vector<ActionKind> out;
    if (plane == Arrival::A) {
        out.push_back({BranchSide::Higher, 2});                    // n+1
        if (y > 0) out.push_back({BranchSide::Lower, 1});          // m+1
    } else {
        out.push_back({BranchSide::Higher, 1});                    // d+1
        if (x <= 0 && y > 0) out.push_back({BranchSide::Lower, 1});  // m+1
        if (y > x) out.push_back({BranchSide::Higher, 2});         // n+1
    }
    (void)mc;
    return out;
}

ActionKind ZeroDelayModel::prescribed(int mc, int x, int y, Arrival plane,
                                      PolicyKind policy) const {
    (void)mc;
    if (policy == PolicyKind::PrivateMining || policy == PolicyKind::BaitAndSwitch ||
        policy == PolicyKind::TargetBaitAndSwitch) {
        if (plane == Arrival::A) {
            if (x > 0 && y > 0) return {BranchSide::Lower, 1};
            return {BranchSide::Higher, 2};
        }
        if (x == 0 && y > 0) return {BranchSide::Lower, 1};
        return {BranchSide::Higher, 1};
    }
    throw std::invalid_argument("zero-delay policy evaluation supports the builtin policies");
}

template <class Chooser>
SweepStats ZeroDelayModel::sweep_to_fixpoint(double tol, int max_sweeps, Chooser&& choose) {
    SweepStats stats;
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        double residual = 0.0;
        for (int mc = k_; mc >= 0; --mc) {
            for (int x = caps_.deficit_cap - 1; x >= x_lo_; --x) {
                for (int y = caps_.gap_cap; y >= 0; --y) {
                    if (!in_range(mc, x, y) || violating(mc, x)) continue;
                    // Arrival planes first so the chance plane sees fresh values.
                    for (int plane = 2; plane >= 1; --plane) {
                        const Arrival arr = plane == 1 ? Arrival::A : Arrival::H;
                        ValueBracket next = choose(mc, x, y, arr);
                        const std::size_t i = index(plane, mc, x, y);
                        residual = std::max(residual, std::abs(next.lo - lo_[i]));
                        residual = std::max(residual, std::abs(next.hi - hi_[i]));
                        lo_[i] = next.lo;
                        hi_[i] = next.hi;
                        if (next.lo > next.hi + 1e-9)
                            throw NumericalError("value bracket widened during iteration");
                    }
                    const std::size_t ia = index(1, mc, x, y);
                    const std::size_t ih = index(2, mc, x, y);
                    const std::size_t ic = index(0, mc, x, y);
                    const double clo = beta_ * lo_[ia] + (1.0 - beta_) * lo_[ih];
                    const double chi = beta_ * hi_[ia] + (1.0 - beta_) * hi_[ih];
                    residual = std::max(residual, std::abs(clo - lo_[ic]));
                    residual = std::max(residual, std::abs(chi - hi_[ic]));
                    lo_[ic] = clo;
                    hi_[ic] = chi;
                }
            }
        }
        stats.sweeps = sweep;
        stats.residual = residual;
        if (residual < tol) break;
    }
    solved_ = true;
    return stats;
}

SweepStats ZeroDelayModel::solve_optimal(double tol, int max_sweeps) {
    return sweep_to_fixpoint(tol, max_sweeps, [this](int mc, int x, int y, Arrival arr) {
        ValueBracket best{0.0, 0.0};
        for (const ActionKind& a : candidates(mc, x, y, arr)) {
            const ValueBracket v = lookup(apply(mc, x, y, arr, a));
            best.lo = std::max(best.lo, v.lo);
            best.hi = std::max(best.hi, v.hi);
        }
        return best;
    });
}

SweepStats ZeroDelayModel::solve_policy(PolicyKind policy, double tol, int max_sweeps) {
    return sweep_to_fixpoint(tol, max_sweeps, [this, policy](int mc, int x, int y, Arrival arr) {
        return lookup(apply(mc, x, y, arr, prescribed(mc, x, y, arr, policy)));
    });
}

ValueBracket ZeroDelayModel::value(int m, int d, int n, Arrival arrival) const {
    if (m > n || d > n || m < 0 || d < 0)
        throw std::invalid_argument("invalid zero-delay state");
    const int mc = std::min(m, k_);
    const int x = d - m;
    const int y = std::min(n - m, caps_.gap_cap);
    if (violating(mc, x)) return {1.0, 1.0};
    if (x >= caps_.deficit_cap) return {0.0, pin_hi_};
    const int plane = arrival == Arrival::None ? 0 : (arrival == Arrival::A ? 1 : 2);
    const std::size_t i = index(plane, mc, x, y);
    return {lo_[i], hi_[i]};
}

PrescriptionReport ZeroDelayModel::verify_prescriptions() const {
    if (!solved_) throw std::logic_error("solve_optimal must run before verification");
    PrescriptionReport report;
    report.lines = {
        {"A-arrival, d <= m: extend higher tip", 0, 0, 0, 0},
        {"A-arrival, d > m: extend lower tip", 0, 0, 0, 0},
        {"H-arrival, d = m < n: extend lower tip (bait)", 0, 0, 0, 0},
        {"H-arrival, otherwise: extend public front", 0, 0, 0, 0},
    };
    constexpr double slack = 1e-12;
    for (int mc = 0; mc <= k_; ++mc) {
        for (int x = x_lo_; x < caps_.deficit_cap; ++x) {
            for (int y = 0; y <= caps_.gap_cap; ++y) {
                if (!in_range(mc, x, y) || violating(mc, x)) continue;
                for (Arrival arr : {Arrival::A, Arrival::H}) {
                    int bucket;
                    if (arr == Arrival::A)
                        bucket = x <= 0 ? 0 : 1;
                    else
                        bucket = (x == 0 && y > 0) ? 2 : 3;
                    PrescriptionReport::Line& line = report.lines[static_cast<std::size_t>(bucket)];
                    line.states += 1;
                    const ActionKind want = prescribed(mc, x, y, arr, PolicyKind::BaitAndSwitch);
                    const ValueBracket vp = lookup(apply(mc, x, y, arr, want));
                    bool excluded = false;   // some action provably beats it
                    bool tops_both = true;   // achieves the max on both bounds
                    for (const ActionKind& a : candidates(mc, x, y, arr)) {
                        const ValueBracket va = lookup(apply(mc, x, y, arr, a));
                        if (va.lo > vp.hi + slack) excluded = true;
                        if (va.hi > vp.hi + slack || va.lo > vp.lo + slack) tops_both = false;
                    }
                    if (excluded)
                        line.excluded += 1;
                    else if (tops_both)
                        line.confirmed += 1;
                    else
                        line.undecidable += 1;
                }
            }
        }
    }
    return report;
}

}  // namespace powrace
