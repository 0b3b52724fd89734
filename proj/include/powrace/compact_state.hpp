#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace powrace {

enum class Arrival : std::uint8_t { None, A, H };

enum class StateClass : std::uint8_t { Ahead, OnTime, Behind };

enum class BranchSide : std::uint8_t { Higher, Lower };

// Placement of a pending arrival: branch and target height.
struct ActionKind {
    BranchSide branch = BranchSide::Higher;
    int height = 1;

    friend bool operator==(const ActionKind&, const ActionKind&) = default;
};

std::string to_string(const ActionKind& a);

// Timers at or below this are treated as expired. Delta is O(10) s, so this
// sits far below any physical scale yet above accumulated rounding over any
// run length used here.
inline constexpr double kTimerZeroTol = 1e-12;

// Reduced race state: heights of the two highest branches (m lower, n higher),
// highest height d carrying a finite timer, and the per-height minimum timers
// for heights min(m,d)..d. Heights below min(m,d) are public (timer 0);
// heights above d are unoccupied-by-honest (timer infinite).
//
// Invariants:
//   m <= n, d <= n, all heights >= 0
//   timers.size() == d - min(m,d) + 1, entries non-decreasing, within [0, delta]
class CompactState {
public:
    CompactState() : CompactState(0, 0, 0, {0.0}, Arrival::None) {}

    CompactState(int m, int d, int n, std::vector<double> timers,
                 Arrival arrival = Arrival::None);

    static CompactState genesis() { return CompactState(); }

    int m() const { return m_; }
    int d() const { return d_; }
    int n() const { return n_; }
    Arrival arrival() const { return arrival_; }

    int low_height() const { return m_ < d_ ? m_ : d_; }

    // Minimum timer on a height: 0 below the stored window, +inf above d.
    double timer(int height) const {
        if (height < low_height()) return 0.0;
        if (height > d_) return std::numeric_limits<double>::infinity();
        return timers_[static_cast<std::size_t>(height - low_height())];
    }

    const std::vector<double>& timers() const { return timers_; }

    // Highest height whose timer has expired; the height below the stored
    // window counts as expired.
    int public_height() const;

    StateClass classify() const;

    bool is_violation(int k) const { return m_ >= std::max(k, public_height()); }

    void set_arrival(Arrival a);

    // Elapses t seconds: timers decrease and floor at zero. Requires no
    // pending arrival.
    void advance_time(double t);
    CompactState advanced(double t) const {
        CompactState s = *this;
        s.advance_time(t);
        return s;
    }

    // Places the pending arrival per the transition table; afterwards no
    // arrival is pending. Throws std::invalid_argument naming the violated
    // admissibility condition.
    void apply_action(const ActionKind& action, double delta);
    CompactState applied(const ActionKind& action, double delta) const {
        CompactState s = *this;
        s.apply_action(action, delta);
        return s;
    }

    // True (and why=="") when the action is admissible in this state.
    bool action_admissible(const ActionKind& action, std::string* why = nullptr) const;

    std::vector<ActionKind> admissible_actions() const;

    // Checks the representation invariants; throws on breach. delta < 0
    // skips the timer upper-bound check.
    void check_invariants(double delta = -1.0) const;

    std::string to_string() const;

    friend bool operator==(const CompactState& a, const CompactState& b) {
        return a.m_ == b.m_ && a.d_ == b.d_ && a.n_ == b.n_ && a.arrival_ == b.arrival_ &&
               a.timers_ == b.timers_;
    }

    // Equality up to a timer tolerance, for cross-representation checks.
    bool approx_equal(const CompactState& other, double tol) const;

private:
    void drop_below(int new_lo);

    int m_ = 0;
    int d_ = 0;
    int n_ = 0;
    std::vector<double> timers_;
    Arrival arrival_ = Arrival::None;
};

}  // namespace powrace
