#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "powrace/compact_state.hpp"

namespace powrace {

enum class BlockKind : std::uint8_t { Genesis, A, H };

// One block of the reference model. expiry is the absolute time at which the
// block's chain is public; +inf until a delay clamp applies.
struct Block {
    int parent = -1;
    int height = 0;
    BlockKind kind = BlockKind::Genesis;
    double expiry = 0.0;
};

struct TraceEvent {
    double t = 0.0;
    BlockKind kind = BlockKind::H;
    int parent = 0;
};

// Full block tree driven by timed arrivals. Validation-oriented counterpart
// of CompactState; not used on simulation hot paths.
class BlockTree {
public:
    explicit BlockTree(double delta);

    double clock() const { return clock_; }
    double delta() const { return delta_; }
    const std::vector<Block>& blocks() const { return blocks_; }

    void advance_time(double dt);

    // Appends a block under `parent`. H-blocks must land strictly above the
    // public height (their parent chain is then automatically credible);
    // ancestor timers clamp to the delay bound. Returns the block index.
    int add_block(BlockKind kind, int parent);

    bool is_public(int b) const { return blocks_[static_cast<std::size_t>(b)].expiry <= clock_ + kTimerZeroTol; }
    int public_height() const;

    // Height-1 ancestor defining the block's branch; 0 for genesis itself.
    int branch_root(int b) const;

    // Heights of the two highest branches, higher first. Ties break toward
    // the branch with the lower-numbered height-1 block. Missing branches
    // count as height 0.
    std::pair<int, int> top_branch_heights() const;

    // Branch roots matching top_branch_heights(), -1 when absent.
    std::pair<int, int> top_branch_roots() const;

    // Two distinct branches, both credible, both at least k high.
    bool violation(int k) const;

    // State reduction: two highest branches, per-height minimum timers,
    // heights below min(m,d) zeroed.
    CompactState to_compact() const;

    // Any block of the given branch root at the given height, or -1.
    int block_at(int branch_root, int height) const;

    std::vector<TraceEvent> trace() const { return trace_; }

    static BlockTree replay(const std::vector<TraceEvent>& events, double delta);

private:
    double delta_;
    double clock_ = 0.0;
    std::vector<Block> blocks_;
    std::vector<int> roots_;  // branch root per block
    std::vector<TraceEvent> trace_;
};

void write_trace(std::ostream& os, const std::vector<TraceEvent>& events);
std::vector<TraceEvent> read_trace(std::istream& is);
std::string trace_to_string(const std::vector<TraceEvent>& events);

}  // namespace powrace
