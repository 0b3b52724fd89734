#include "powrace/policies.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace powrace {

std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::BaitAndSwitch: return "bait-and-switch";
        case PolicyKind::PrivateMining: return "private-mining";
        case PolicyKind::TargetBaitAndSwitch: return "target-bait-and-switch";
        case PolicyKind::Custom: return "custom";
    }
    return "?";
}

PolicyKind policy_kind_from_string(const std::string& name) {
    if (name == "bait-and-switch" || name == "bait") return PolicyKind::BaitAndSwitch;
    if (name == "private-mining" || name == "private") return PolicyKind::PrivateMining;
    if (name == "target-bait-and-switch") return PolicyKind::TargetBaitAndSwitch;
    if (name == "custom") return PolicyKind::Custom;
    throw std::invalid_argument("unknown policy: " + name);
}

ActionKind bait_and_switch_action(const CompactState& s) {
    const int m = s.m(), d = s.d(), n = s.n();
    if (s.arrival() == Arrival::A) {
        // Extend the second branch only while it trails the highest jumper.
        if (d <= m) return {BranchSide::Higher, n + 1};
        return {BranchSide::Lower, m + 1};
    }
    if (s.arrival() != Arrival::H)
        throw std::invalid_argument("policy queried without a pending arrival");
    switch (s.classify()) {
        case StateClass::Ahead: {
            const double l = s.timer(d);
            if (l > kTimerZeroTol) return {BranchSide::Higher, d};
            if (d == m && m < n) return {BranchSide::Lower, m + 1};  // the bait
            return {BranchSide::Higher, d + 1};
        }
        case StateClass::OnTime:
            return {BranchSide::Lower, m + 1};
        case StateClass::Behind:
            if (s.timer(d) > kTimerZeroTol) return {BranchSide::Higher, d};
            return {BranchSide::Higher, d + 1};
    }
    throw std::logic_error("unreachable");
}

ActionKind private_mining_action(const CompactState& s) {
    const int m = s.m(), d = s.d(), n = s.n();
    if (s.arrival() == Arrival::A) {
        // The all-A chain is the branch that is not the honest one (the honest
        // branch tops out at d under this policy).
        if (m < d) return {BranchSide::Lower, m + 1};
        return {BranchSide::Higher, n + 1};
    }
    if (s.arrival() != Arrival::H)
        throw std::invalid_argument("policy queried without a pending arrival");
    // Lowest admissible height on the honest branch.
    if (s.timer(d) > kTimerZeroTol)
        return {m == d && m < n ? BranchSide::Lower : BranchSide::Higher, d};
    if (m == d && m < n) return {BranchSide::Lower, m + 1};
    return {BranchSide::Higher, d + 1};
}

ActionKind target_bait_and_switch_action(const CompactState& s) {
    // Start states are already height-normalized, so the height-1 decision
    // table applies unchanged.
    return bait_and_switch_action(s);
}

CompactState place_target(int lead, bool highest_jumper_public, bool target_is_jumper,
                          double delta) {
    if (lead < 0) throw std::invalid_argument("pre-mining lead must be >= 0");
    if (!target_is_jumper && highest_jumper_public)
        throw std::invalid_argument(
            "a target arriving after the highest jumper is public must be a jumper");
    if (target_is_jumper) {
        if (lead == 0) return CompactState(0, 1, 1, {0.0, delta});
        return CompactState(1, 1, lead, {delta});
    }
    if (lead == 0) return CompactState(1, 2, 2, {0.0, delta});
    return CompactState(2, 2, 1 + lead, {delta});
}

bool PolicyTable::Key::operator<(const Key& o) const {
    if (cls != o.cls) return cls < o.cls;
    if (arrival != o.arrival) return arrival < o.arrival;
    if (ld_zero != o.ld_zero) return ld_zero < o.ld_zero;
    if (m_eq_n != o.m_eq_n) return m_eq_n < o.m_eq_n;
    return d_le_m < o.d_le_m;
}

namespace {

int parse_key_field(const std::string& raw, const char* what,
                    int (*convert)(const std::string&)) {
    if (raw == "*") return -1;
    int v = convert(raw);
    if (v < 0) throw std::invalid_argument(std::string("bad ") + what + " value: " + raw);
    return v;
}

int convert_class(const std::string& s) {
    if (s == "ahead") return 0;
    if (s == "ontime" || s == "on-time") return 1;
    if (s == "behind") return 2;
    return -2;
}

int convert_arrival(const std::string& s) {
    if (s == "A" || s == "a") return 0;
    if (s == "H" || s == "h") return 1;
    return -2;
}

int convert_bool(const std::string& s) {
    if (s == "0" || s == "false") return 0;
    if (s == "1" || s == "true") return 1;
    return -2;
}

}  // namespace

void PolicyTable::add_rule(const std::string& cls, const std::string& arrival,
                           const std::string& ld_zero, const std::string& m_eq_n,
                           const std::string& d_le_m, Rule rule) {
    Key key{parse_key_field(cls, "class", convert_class),
            parse_key_field(arrival, "arrival", convert_arrival),
            parse_key_field(ld_zero, "ld_zero", convert_bool),
            parse_key_field(m_eq_n, "m_eq_n", convert_bool),
            parse_key_field(d_le_m, "d_le_m", convert_bool)};
    rules_[key] = rule;
}

ActionKind PolicyTable::action(const CompactState& s) const {
    int cls;
    switch (s.classify()) {
        case StateClass::Ahead: cls = 0; break;
        case StateClass::OnTime: cls = 1; break;
        default: cls = 2; break;
    }
    const int arrival = s.arrival() == Arrival::A ? 0 : 1;
    const int ld_zero = s.timer(s.d()) <= kTimerZeroTol ? 1 : 0;
    const int m_eq_n = s.m() == s.n() ? 1 : 0;
    const int d_le_m = s.d() <= s.m() ? 1 : 0;

    // Most-specific match wins: try every wildcard mask from none to all.
    const Rule* best = nullptr;
    int best_wildcards = 6;
    for (const auto& [key, rule] : rules_) {
        auto matches = [](int pat, int val) { return pat == -1 || pat == val; };
        if (!matches(key.cls, cls) || !matches(key.arrival, arrival) ||
            !matches(key.ld_zero, ld_zero) || !matches(key.m_eq_n, m_eq_n) ||
            !matches(key.d_le_m, d_le_m))
            continue;
        const int wildcards = (key.cls == -1) + (key.arrival == -1) + (key.ld_zero == -1) +
                              (key.m_eq_n == -1) + (key.d_le_m == -1);
        if (wildcards < best_wildcards) {
            best_wildcards = wildcards;
            best = &rule;
        }
    }
    if (!best)
        throw std::invalid_argument("policy table has no rule for state " + s.to_string());
    int height;
    switch (best->height) {
        case HeightExpr::D: height = s.d(); break;
        case HeightExpr::DPlus1: height = s.d() + 1; break;
        case HeightExpr::MPlus1: height = s.m() + 1; break;
        default: height = s.n() + 1; break;
    }
    return {best->branch, height};
}

PolicyTable PolicyTable::from_csv(std::istream& is) {
    PolicyTable table;
    std::string line;
    bool saw_rule = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cell.erase(std::remove_if(cell.begin(), cell.end(), ::isspace), cell.end());
            cells.push_back(cell);
        }
        if (cells.size() != 7)
            throw std::invalid_argument("policy table rows need 7 columns, got: " + line);
        if (cells[0] == "class") continue;  // header
        Rule rule;
        if (cells[5] == "higher")
            rule.branch = BranchSide::Higher;
        else if (cells[5] == "lower")
            rule.branch = BranchSide::Lower;
        else
            throw std::invalid_argument("bad branch column: " + cells[5]);
        if (cells[6] == "d")
            rule.height = HeightExpr::D;
        else if (cells[6] == "d+1")
            rule.height = HeightExpr::DPlus1;
        else if (cells[6] == "m+1")
            rule.height = HeightExpr::MPlus1;
        else if (cells[6] == "n+1")
            rule.height = HeightExpr::NPlus1;
        else
            throw std::invalid_argument("bad height_expr column: " + cells[6]);
        table.add_rule(cells[0], cells[1], cells[2], cells[3], cells[4], rule);
        saw_rule = true;
    }
    if (!saw_rule) throw std::invalid_argument("policy table is empty");
    return table;
}

PolicyTable PolicyTable::from_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open policy table: " + path);
    return from_csv(f);
}

ActionKind Policy::action(const CompactState& s) const {
    switch (kind_) {
        case PolicyKind::BaitAndSwitch: return bait_and_switch_action(s);
        case PolicyKind::PrivateMining: return private_mining_action(s);
        case PolicyKind::TargetBaitAndSwitch: return target_bait_and_switch_action(s);
        case PolicyKind::Custom: return table_.action(s);
    }
    throw std::logic_error("unreachable");
}

}  // namespace powrace
