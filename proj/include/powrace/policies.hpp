#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "powrace/compact_state.hpp"

namespace powrace {

enum class PolicyKind : std::uint8_t {
    BaitAndSwitch,
    PrivateMining,
    TargetBaitAndSwitch,
    Custom,
};

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(const std::string& name);

// Optimal attack decision table. Total on non-violation states with a
// pending arrival; every returned action is admissible.
ActionKind bait_and_switch_action(const CompactState& s);

// Baseline: the adversary extends its private all-A chain and delays honest
// blocks maximally (H lands at the lowest admissible height on the honest
// branch).
ActionKind private_mining_action(const CompactState& s);

// General-target variant: identical decision table on the height-shifted
// state produced by place_target.
ActionKind target_bait_and_switch_action(const CompactState& s);

// Normalized start state once the target block is placed, by pre-mining lead
// and whether the target itself is the first honest block at its height.
// For non-jumper targets the lead is the one observed at the next jumper.
CompactState place_target(int lead, bool highest_jumper_public, bool target_is_jumper,
                          double delta);

// User-supplied decision table keyed by
// (classification, arrival, l_d == 0, m == n, d <= m); heights are one of
// d, d+1, m+1, n+1. '*' wildcards any key column.
class PolicyTable {
public:
    enum class HeightExpr : std::uint8_t { D, DPlus1, MPlus1, NPlus1 };

    struct Rule {
        BranchSide branch;
        HeightExpr height;
    };

    void add_rule(const std::string& cls, const std::string& arrival, const std::string& ld_zero,
                  const std::string& m_eq_n, const std::string& d_le_m, Rule rule);

    ActionKind action(const CompactState& s) const;

    static PolicyTable from_csv(std::istream& is);
    static PolicyTable from_csv_file(const std::string& path);

private:
    // Key fields use -1 as wildcard; cls in {0 ahead, 1 on-time, 2 behind}.
    struct Key {
        int cls, arrival, ld_zero, m_eq_n, d_le_m;
        bool operator<(const Key& o) const;
    };
    std::map<Key, Rule> rules_;
};

// A policy selected by kind (or a caller-owned custom table).
class Policy {
public:
    explicit Policy(PolicyKind kind) : kind_(kind) {
        if (kind == PolicyKind::Custom)
            throw std::invalid_argument("custom policy requires a table");
    }
    Policy(std::string name, PolicyTable table)
        : kind_(PolicyKind::Custom), name_(std::move(name)), table_(std::move(table)) {}

    PolicyKind kind() const { return kind_; }
    const std::string& name() const { return name_; }

    ActionKind action(const CompactState& s) const;

private:
    PolicyKind kind_;
    std::string name_;
    PolicyTable table_;
};

}  // namespace powrace
