#include "powrace/block_tree.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace powrace {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

BlockTree::BlockTree(double delta) : delta_(delta) {
    if (delta < 0.0) throw std::invalid_argument("delta must be >= 0");
    blocks_.push_back(Block{-1, 0, BlockKind::Genesis, 0.0});
    roots_.push_back(0);
}

void BlockTree::advance_time(double dt) {
    if (dt < 0.0) throw std::invalid_argument("cannot advance time by a negative amount");
    clock_ += dt;
}

int BlockTree::public_height() const {
    int p = 0;
    for (std::size_t b = 0; b < blocks_.size(); ++b)
        if (is_public(static_cast<int>(b))) p = std::max(p, blocks_[b].height);
    return p;
}

int BlockTree::branch_root(int b) const { return roots_[static_cast<std::size_t>(b)]; }

int BlockTree::add_block(BlockKind kind, int parent) {
    if (kind == BlockKind::Genesis) throw std::invalid_argument("genesis already exists");
    if (parent < 0 || parent >= static_cast<int>(blocks_.size()))
        throw std::invalid_argument("parent block does not exist");
    const int height = blocks_[static_cast<std::size_t>(parent)].height + 1;
    if (kind == BlockKind::H) {
        const int p = public_height();
        if (height <= p)
            throw std::invalid_argument("H-block at height " + std::to_string(height) +
                                        " not above public height " + std::to_string(p));
    }
    const int idx = static_cast<int>(blocks_.size());
    const double expiry = kind == BlockKind::H ? clock_ + delta_ : kInf;
    blocks_.push_back(Block{parent, height, kind, expiry});
    roots_.push_back(height == 1 ? idx : roots_[static_cast<std::size_t>(parent)]);
    if (kind == BlockKind::H) {
        // Delay bound: ancestors not yet scheduled within delta become public
        // together with this block.
        for (int b = parent; b > 0; b = blocks_[static_cast<std::size_t>(b)].parent) {
            Block& blk = blocks_[static_cast<std::size_t>(b)];
            if (blk.expiry > clock_ + delta_) blk.expiry = clock_ + delta_;
        }
    }
    trace_.push_back(TraceEvent{clock_, kind, parent});
    return idx;
}

std::pair<int, int> BlockTree::top_branch_roots() const {
    // Branch height per height-1 root.
    std::map<int, int> height_of_root;
    for (std::size_t b = 1; b < blocks_.size(); ++b) {
        const int r = roots_[b];
        auto [it, fresh] = height_of_root.emplace(r, blocks_[b].height);
        if (!fresh) it->second = std::max(it->second, blocks_[b].height);
    }
    int r1 = -1, r2 = -1, h1 = -1, h2 = -1;
    for (const auto& [root, height] : height_of_root) {
        // Strict comparisons keep the lower-numbered root on top of ties
        // (map iterates roots in increasing order).
        if (height > h1) {
            r2 = r1;
            h2 = h1;
            r1 = root;
            h1 = height;
        } else if (height > h2) {
            r2 = root;
            h2 = height;
        }
    }
    return {r1, r2};
}

std::pair<int, int> BlockTree::top_branch_heights() const {
    auto [r1, r2] = top_branch_roots();
    auto height_of = [&](int r) {
        if (r < 0) return 0;
        int h = 0;
        for (std::size_t b = 0; b < blocks_.size(); ++b)
            if (roots_[b] == r) h = std::max(h, blocks_[b].height);
        return h;
    };
    return {height_of(r1), height_of(r2)};
}

bool BlockTree::violation(int k) const {
    auto [h1, h2] = top_branch_heights();
    auto [r1, r2] = top_branch_roots();
    if (r1 < 0 || r2 < 0) return false;
    const int need = std::max(k, public_height());
    return h1 >= need && h2 >= need;
}

CompactState BlockTree::to_compact() const {
    auto [h1, h2] = top_branch_heights();
    const int n = h1;
    const int m = h2;
    // Per-height minimum timers across the whole tree.
    const int max_h = n;
    std::vector<double> min_timer(static_cast<std::size_t>(max_h) + 1, kInf);
    for (const Block& b : blocks_) {
        const double remaining = std::max(0.0, b.expiry - clock_);
        double& slot = min_timer[static_cast<std::size_t>(b.height)];
        slot = std::min(slot, b.expiry == kInf ? kInf : remaining);
    }
    int d = 0;
    for (int j = 0; j <= max_h; ++j)
        if (min_timer[static_cast<std::size_t>(j)] < kInf) d = j;
    const int lo = std::min(m, d);
    std::vector<double> window(static_cast<std::size_t>(d - lo + 1));
    for (int j = lo; j <= d; ++j)
        window[static_cast<std::size_t>(j - lo)] = min_timer[static_cast<std::size_t>(j)];
    return CompactState(m, d, n, std::move(window));
}

int BlockTree::block_at(int branch_root, int height) const {
    if (height == 0) return 0;
    for (std::size_t b = 1; b < blocks_.size(); ++b)
        if (roots_[b] == branch_root && blocks_[b].height == height) return static_cast<int>(b);
    return -1;
}

BlockTree BlockTree::replay(const std::vector<TraceEvent>& events, double delta) {
    BlockTree tree(delta);
    bool first = true;
    for (const TraceEvent& e : events) {
        double t = e.t;
        if (!first && t == tree.clock_) {
            // Arrivals are strictly ordered in continuous time; a zero gap in
            // an external trace is nudged by one representable increment.
            t = std::nextafter(tree.clock_, kInf);
        }
        if (t < tree.clock_) throw std::invalid_argument("trace events out of order");
        tree.advance_time(t - tree.clock_);
        tree.add_block(e.kind, e.parent);
        first = false;
    }
    return tree;
}

void write_trace(std::ostream& os, const std::vector<TraceEvent>& events) {
    os << std::setprecision(15);
    for (const TraceEvent& e : events)
        os << e.t << ' ' << (e.kind == BlockKind::A ? 'A' : 'H') << ' ' << e.parent << '\n';
}

std::vector<TraceEvent> read_trace(std::istream& is) {
    std::vector<TraceEvent> out;
    double t;
    char kind;
    int parent;
    while (is >> t >> kind >> parent) {
        if (kind != 'A' && kind != 'H')
            throw std::invalid_argument(std::string("unknown block kind in trace: ") + kind);
        out.push_back(TraceEvent{t, kind == 'A' ? BlockKind::A : BlockKind::H, parent});
    }
    return out;
}

std::string trace_to_string(const std::vector<TraceEvent>& events) {
    std::ostringstream os;
    write_trace(os, events);
    return os.str();
}

}  // namespace powrace
