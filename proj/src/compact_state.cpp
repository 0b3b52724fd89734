#include "powrace/compact_state.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace powrace {

std::string to_string(const ActionKind& a) {
    std::ostringstream os;
    os << (a.branch == BranchSide::Higher ? "higher@" : "lower@") << a.height;
    return os.str();
}

CompactState::CompactState(int m, int d, int n, std::vector<double> timers, Arrival arrival)
    : m_(m), d_(d), n_(n), timers_(std::move(timers)), arrival_(arrival) {
    check_invariants();
}

int CompactState::public_height() const {
    const int lo = low_height();
    for (int j = d_; j >= lo; --j) {
        if (timers_[static_cast<std::size_t>(j - lo)] <= kTimerZeroTol) return j;
    }
    return lo - 1;
}

StateClass CompactState::classify() const {
    if (m_ + 1 > d_) return StateClass::Ahead;
    return timer(m_ + 1) <= kTimerZeroTol ? StateClass::Behind : StateClass::OnTime;
}

void CompactState::set_arrival(Arrival a) {
    if (a != Arrival::None && arrival_ != Arrival::None)
        throw std::invalid_argument("arrival already pending");
    arrival_ = a;
}

void CompactState::advance_time(double t) {
    if (t < 0.0) throw std::invalid_argument("cannot advance time by a negative amount");
    if (arrival_ != Arrival::None)
        throw std::invalid_argument("cannot advance time with an arrival pending");
    for (double& l : timers_) l = std::max(0.0, l - t);
}

bool CompactState::action_admissible(const ActionKind& action, std::string* why) const {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (arrival_ == Arrival::None) return fail("no arrival pending");
    if (action.height < 1) return fail("placement height must be >= 1");
    const int cap = action.branch == BranchSide::Higher ? n_ + 1 : m_ + 1;
    if (action.height > cap)
        return fail("placement height " + std::to_string(action.height) +
                    " exceeds branch tip + 1 (" + std::to_string(cap) + ")");
    if (arrival_ == Arrival::H) {
        const int p = public_height();
        if (action.height <= p)
            return fail("H-block at height " + std::to_string(action.height) +
                        " not above public height " + std::to_string(p));
    }
    if (why) why->clear();
    return true;
}

std::vector<ActionKind> CompactState::admissible_actions() const {
    std::vector<ActionKind> out;
    if (arrival_ == Arrival::None) return out;
    const int lo = arrival_ == Arrival::H ? public_height() + 1 : 1;
    for (int i = lo; i <= n_ + 1; ++i) out.push_back({BranchSide::Higher, i});
    for (int i = lo; i <= m_ + 1; ++i) out.push_back({BranchSide::Lower, i});
    return out;
}

// Drops window entries below the new low height (they become implicit
// zeros). Must run before m_/d_ change, while low_height() is still old.
void CompactState::drop_below(int new_lo) {
    const int shift = new_lo - low_height();
    if (shift > 0) timers_.erase(timers_.begin(), timers_.begin() + shift);
}

void CompactState::apply_action(const ActionKind& action, double delta) {
    std::string why;
    if (!action_admissible(action, &why))
        throw std::invalid_argument("inadmissible action " + powrace::to_string(action) +
                                    " in state " + to_string() + ": " + why);
    const Arrival kind = arrival_;
    arrival_ = Arrival::None;
    const int i = action.height;

    if (kind == Arrival::A) {
        if (action.branch == BranchSide::Higher) {
            if (i == n_ + 1) n_ += 1;  // extend higher tip; joins below otherwise
        } else if (i == m_ + 1) {
            if (m_ < n_) {
                drop_below(std::min(m_ + 1, d_));
                m_ += 1;
            } else {
                n_ = m_ + 1;  // equal heights: extending "lower" swaps the labels
            }
        }
        return;
    }

    // H-arrival: every newly occupied height starts a delta timer.
    if (action.branch == BranchSide::Higher) {
        if (i <= d_) return;  // joins a height already carrying a finite timer
        if (d_ < m_) {
            // All heights between the tips were adversarial; their timers
            // clamp to delta and everything below the window drops out.
            d_ = i;
            if (i > n_) n_ = i;
            timers_.assign(static_cast<std::size_t>(i - std::min(m_, i) + 1), delta);
        } else {
            timers_.insert(timers_.end(), static_cast<std::size_t>(i - d_), delta);
            d_ = i;
            if (i > n_) n_ = i;
        }
        return;
    }

    // Lower branch.
    if (i <= std::min(d_, m_)) return;
    if (i <= m_) {  // d_ < i: joins the lower branch below its tip (ahead states)
        d_ = i;
        timers_.assign(1, delta);
        return;
    }
    // i == m_ + 1
    if (m_ + 1 <= d_) {
        drop_below(m_ + 1);
        m_ += 1;
    } else if (m_ < n_) {
        m_ += 1;
        d_ = m_;
        timers_.assign(1, delta);
    } else {
        // d_ <= m_ == n_: swap; the extended branch becomes the higher one.
        const double at_m = d_ == m_ ? timers_.back() : delta;
        d_ = m_ + 1;
        n_ = m_ + 1;
        timers_.assign(2, delta);
        timers_[0] = at_m;
    }
}

void CompactState::check_invariants(double delta) const {
    auto bad = [&](const std::string& msg) {
        throw std::invalid_argument("invalid compact state " + to_string() + ": " + msg);
    };
    if (m_ < 0 || d_ < 0 || n_ < 0) bad("negative height");
    if (m_ > n_) bad("lower branch above higher branch");
    if (d_ > n_) bad("finite-timer height above higher branch");
    const std::size_t want = static_cast<std::size_t>(d_ - low_height() + 1);
    if (timers_.size() != want)
        bad("timer window has " + std::to_string(timers_.size()) + " entries, expected " +
            std::to_string(want));
    for (std::size_t q = 0; q < timers_.size(); ++q) {
        if (!(timers_[q] >= 0.0)) bad("negative or NaN timer");
        if (delta >= 0.0 && timers_[q] > delta + kTimerZeroTol) bad("timer exceeds delta");
        if (q > 0 && timers_[q] + kTimerZeroTol < timers_[q - 1])
            bad("timers not non-decreasing");
    }
}

bool CompactState::approx_equal(const CompactState& other, double tol) const {
    if (m_ != other.m_ || d_ != other.d_ || n_ != other.n_ || arrival_ != other.arrival_)
        return false;
    if (timers_.size() != other.timers_.size()) return false;
    for (std::size_t q = 0; q < timers_.size(); ++q)
        if (std::abs(timers_[q] - other.timers_[q]) > tol) return false;
    return true;
}

std::string CompactState::to_string() const {
    std::ostringstream os;
    os << '[' << m_ << ',' << d_ << ',' << n_ << ",(";
    for (std::size_t q = 0; q < timers_.size(); ++q) {
        if (q) os << ',';
        os << timers_[q];
    }
    os << ')';
    switch (arrival_) {
        case Arrival::A: os << ",A"; break;
        case Arrival::H: os << ",H"; break;
        case Arrival::None: break;
    }
    os << ']';
    return os.str();
}

}  // namespace powrace
