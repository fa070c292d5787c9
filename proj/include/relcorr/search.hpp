#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "relcorr/data.hpp"
#include "relcorr/error.hpp"
#include "relcorr/estimators.hpp"

namespace relcorr {

// Attribute indices by decreasing entropy, ties by ascending index.
inline std::vector<std::size_t> order_attributes(const EncodedDataset& data)
{
    std::vector<std::size_t> idx(data.size());
    for (std::size_t j = 0; j < idx.size(); ++j) {
        idx[j] = j;
    }
    sort_by_entropy(data, idx);
    return idx;
}

// A node of the enumeration tree. `positions` index into the global
// decreasing-entropy order and are strictly increasing, so every node is a
// chain of low-entropy extensions from the empty set.
struct SearchNode {
    std::vector<std::size_t> positions;
    SubsetScore score;
    std::optional<RowPartition> partition;
    double potential = 1.0;

    [[nodiscard]] std::size_t size() const noexcept { return positions.size(); }
    // Next position a child may add.
    [[nodiscard]] std::size_t next_position() const noexcept { return positions.empty() ? 0 : positions.back() + 1; }
};

struct RankedSubset {
    // Attribute indices, ascending.
    std::vector<std::size_t> members;
    SubsetScore score;
};

namespace detail {

inline std::vector<std::size_t> ascending(std::vector<std::size_t> v)
{
    std::sort(v.begin(), v.end());
    return v;
}

// true if (va, a) ranks strictly before (vb, b): higher value, then the
// lexicographically smaller member tuple.
inline bool ranks_before(double va, const std::vector<std::size_t>& a, double vb, const std::vector<std::size_t>& b)
{
    if (va != vb) {
        return va > vb;
    }
    return a < b;
}

} // namespace detail

// The k best subsets offered so far, ranked by score.value descending then by
// ascending member tuple. Subsets of fewer than two attributes are ignored.
class TopKStore {
public:
    explicit TopKStore(std::size_t k) : k_(k)
    {
        if (k < 1) {
            throw UsageError("k must be >= 1");
        }
    }

    // Returns true if the subset entered the store.
    bool offer(const SubsetScore& score)
    {
        if (score.members.size() < 2) {
            return false;
        }
        RankedSubset entry{detail::ascending(score.members), score};
        if (entries_.size() == k_ &&
            !detail::ranks_before(entry.score.value, entry.members, entries_.back().score.value, entries_.back().members)) {
            return false;
        }
        auto pos = std::lower_bound(entries_.begin(), entries_.end(), entry, [](const RankedSubset& x, const RankedSubset& y) {
            return detail::ranks_before(x.score.value, x.members, y.score.value, y.members);
        });
        entries_.insert(pos, std::move(entry));
        if (entries_.size() > k_) {
            entries_.pop_back();
        }
        return true;
    }

    // k-th best value, or -inf while fewer than k subsets are held.
    [[nodiscard]] double threshold() const noexcept
    {
        return entries_.size() < k_ ? -std::numeric_limits<double>::infinity() : entries_.back().score.value;
    }

    [[nodiscard]] std::size_t capacity() const noexcept { return k_; }
    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] const std::vector<RankedSubset>& entries() const noexcept { return entries_; }
    [[nodiscard]] const RankedSubset& operator[](std::size_t i) const { return entries_[i]; }

private:
    std::size_t k_;
    std::vector<RankedSubset> entries_;
};

// 100 - 100 q / 2^d, representable for any d.
inline double prune_percent(std::uint64_t explored, std::size_t attributes)
{
    return 100.0 - std::ldexp(100.0 * static_cast<double>(explored), -static_cast<int>(attributes));
}

struct SearchStats {
    // Subsets whose score was evaluated.
    std::uint64_t nodes_explored = 0;
    // Nodes discarded by the bound, at generation or when popped.
    std::uint64_t nodes_pruned = 0;
    double prune_percent = 0.0;
    std::size_t max_depth_reached = 0;
    std::size_t solution_depth = 0;
    std::chrono::duration<double> wall_time{0.0};
};

struct SearchOptions {
    double alpha = 1.0;
    std::optional<std::chrono::duration<double>> budget;
    // Partition storage allowed for queued nodes before they drop theirs.
    std::size_t partition_cache_bytes = std::size_t{1} << 30;
    // false enumerates the whole space (testing aid).
    bool prune = true;
    // Called for every generated child after its potential is known.
    std::function<void(const SearchNode& parent, const SearchNode& child)> on_child;
};

struct SearchResult {
    TopKStore top;
    SearchStats stats;
    bool complete = true;
};

// Dataset view shared by the search routines: the global entropy order and
// suffix sums of marginal entropies along it.
class SearchSpace {
public:
    explicit SearchSpace(const EncodedDataset& data) : data_(&data), order_(order_attributes(data))
    {
        suffix_entropy_.assign(order_.size() + 1, 0.0);
        for (std::size_t p = order_.size(); p-- > 0;) {
            suffix_entropy_[p] = suffix_entropy_[p + 1] + data[order_[p]].entropy;
        }
    }

    [[nodiscard]] const EncodedDataset& data() const noexcept { return *data_; }
    [[nodiscard]] const std::vector<std::size_t>& order() const noexcept { return order_; }
    [[nodiscard]] std::size_t size() const noexcept { return order_.size(); }

    [[nodiscard]] SearchNode root() const
    {
        SearchNode node;
        node.partition = RowPartition::whole(data_->rows());
        node.potential = 1.0;
        return node;
    }

    [[nodiscard]] bool has_refinements(const SearchNode& node) const noexcept { return node.next_position() < size(); }

    // Sum of marginal entropies of the attributes a descendant may still add.
    [[nodiscard]] double refinement_entropy(const SearchNode& node) const { return suffix_entropy_[node.next_position()]; }

    [[nodiscard]] std::vector<std::size_t> attributes_of(const std::vector<std::size_t>& positions) const
    {
        std::vector<std::size_t> out;
        out.reserve(positions.size());
        for (std::size_t p : positions) {
            out.push_back(order_[p]);
        }
        return out;
    }

    // Builds the node for `positions` from scratch.
    [[nodiscard]] SearchNode make_node(std::vector<std::size_t> positions) const
    {
        SearchNode node;
        node.positions = std::move(positions);
        const auto members = attributes_of(node.positions);
        node.partition = partition_of(*data_, members);
        node.score = score_subset(*data_, members);
        return node;
    }

    // One child per position after the node's last one, each scored from the
    // parent's partition. Potentials are left at 1.
    [[nodiscard]] std::vector<SearchNode> expand(const SearchNode& node) const
    {
        std::vector<SearchNode> children;
        if (!has_refinements(node)) {
            return children;
        }
        std::optional<RowPartition> rebuilt;
        if (!node.partition) {
            rebuilt = partition_of(*data_, attributes_of(node.positions));
        }
        const RowPartition& base = node.partition ? *node.partition : *rebuilt;
        const auto parent_members = attributes_of(node.positions);

        children.reserve(size() - node.next_position());
        for (std::size_t p = node.next_position(); p < size(); ++p) {
            SearchNode child;
            child.positions = node.positions;
            child.positions.push_back(p);
            const std::size_t attr = order_[p];
            child.partition = refine_partition(base, (*data_)[attr]);
            auto members = parent_members;
            members.push_back(attr);
            const double hsum = node.score.entropy_sum + (*data_)[attr].entropy;
            child.score = detail::finish_score(*data_, std::move(members), hsum, child.partition->entropy(),
                                               child.partition->cell_count());
            children.push_back(std::move(child));
        }
        return children;
    }

    // 1 - t_relaxed; admissible because the relaxed correction only grows
    // along low-entropy extensions.
    [[nodiscard]] double bound_mon(const SearchNode& node) const
    {
        if (node.size() < 2) {
            return 1.0;
        }
        return 1.0 - node.score.t_relaxed;
    }

    // Plug-in ratio with the remaining refinement entropies added to both
    // numerator and denominator, minus t_relaxed.
    [[nodiscard]] double bound_ref(const SearchNode& node) const
    {
        if (node.size() < 2) {
            return 1.0;
        }
        const double extra = refinement_entropy(node);
        const double den = node.score.normalizer + extra;
        if (!(den > 0.0)) {
            return 0.0;
        }
        const double ratio = std::clamp((node.score.total_correlation + extra) / den, 0.0, 1.0);
        return ratio - node.score.t_relaxed;
    }

    // min(bound_mon, bound_ref), skipping bound_ref when bound_mon alone
    // already fails alpha * bound > threshold.
    [[nodiscard]] double potential(const SearchNode& node, double alpha, double threshold) const
    {
        if (node.size() < 2) {
            return 1.0;
        }
        const double mon = bound_mon(node);
        if (!(alpha * mon > threshold)) {
            return mon;
        }
        return std::min(mon, bound_ref(node));
    }

private:
    const EncodedDataset* data_;
    std::vector<std::size_t> order_;
    std::vector<double> suffix_entropy_;
};

namespace detail {

inline void check_search_input(const EncodedDataset& data, std::size_t k)
{
    if (k < 1) {
        throw UsageError("k must be >= 1");
    }
    if (data.size() < 2) {
        throw DataError("search needs at least two attributes");
    }
}

inline void finish_stats(SearchStats& stats, const TopKStore& top, std::size_t d,
                         std::chrono::steady_clock::time_point start)
{
    stats.prune_percent = prune_percent(stats.nodes_explored, d);
    stats.solution_depth = top.empty() ? 0 : top[0].members.size();
    stats.wall_time = std::chrono::steady_clock::now() - start;
}

// Queue order: higher potential first, then lexicographically smaller positions.
struct QueueLess {
    bool operator()(const SearchNode& a, const SearchNode& b) const
    {
        if (a.potential != b.potential) {
            return a.potential < b.potential;
        }
        return a.positions > b.positions;
    }
};

} // namespace detail

// Best-first branch-and-bound for the top-k subsets under w_corrected. A node
// is expanded only while alpha * potential exceeds the current k-th best
// score; on natural termination each returned score is at least alpha times
// the best score available at its rank.
inline SearchResult branch_and_bound(const EncodedDataset& data, std::size_t k, const SearchOptions& options = {})
{
    detail::check_search_input(data, k);
    const double alpha = options.alpha;
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw UsageError("alpha must lie in (0, 1]");
    }
    const auto start = std::chrono::steady_clock::now();
    const SearchSpace space(data);
    SearchResult result{TopKStore(k), {}, true};
    auto& stats = result.stats;
    auto& top = result.top;

    std::vector<SearchNode> heap;
    heap.push_back(space.root());
    std::size_t cached_bytes = heap.back().partition->bytes();
    const detail::QueueLess less;

    while (!heap.empty()) {
        if (options.budget && std::chrono::steady_clock::now() - start > *options.budget) {
            result.complete = false;
            break;
        }
        std::pop_heap(heap.begin(), heap.end(), less);
        SearchNode node = std::move(heap.back());
        heap.pop_back();
        if (node.partition) {
            cached_bytes -= node.partition->bytes();
        }
        if (options.prune && !(alpha * node.potential > top.threshold())) {
            ++stats.nodes_pruned;
            continue;
        }

        auto children = space.expand(node);
        for (const auto& child : children) {
            ++stats.nodes_explored;
            stats.max_depth_reached = std::max(stats.max_depth_reached, child.size());
            top.offer(child.score);
        }
        for (auto& child : children) {
            child.potential = space.potential(child, alpha, top.threshold());
            if (options.on_child) {
                options.on_child(node, child);
            }
            if (!space.has_refinements(child)) {
                continue;
            }
            if (options.prune && !(alpha * child.potential > top.threshold())) {
                ++stats.nodes_pruned;
                continue;
            }
            const std::size_t bytes = child.partition->bytes();
            if (cached_bytes + bytes > options.partition_cache_bytes) {
                child.partition.reset();
            } else {
                cached_bytes += bytes;
            }
            heap.push_back(std::move(child));
            std::push_heap(heap.begin(), heap.end(), less);
        }
    }
    detail::finish_stats(stats, top, data.size(), start);
    return result;
}

// Greedy level-wise search: scores every pair, then repeatedly refines only
// the best child of the current node. Stops when the current node has no
// refinements or its potential cannot beat the k-th best score.
inline SearchResult greedy(const EncodedDataset& data, std::size_t k)
{
    detail::check_search_input(data, k);
    const auto start = std::chrono::steady_clock::now();
    const SearchSpace space(data);
    SearchResult result{TopKStore(k), {}, true};
    auto& stats = result.stats;
    auto& top = result.top;

    auto better = [](const SearchNode& a, const SearchNode& b) {
        return detail::ranks_before(a.score.value, detail::ascending(a.score.members), b.score.value,
                                    detail::ascending(b.score.members));
    };

    std::optional<SearchNode> current;
    auto singletons = space.expand(space.root());
    stats.nodes_explored += singletons.size();
    stats.max_depth_reached = 1;
    for (const auto& single : singletons) {
        auto pairs = space.expand(single);
        for (auto& pair : pairs) {
            ++stats.nodes_explored;
            stats.max_depth_reached = 2;
            top.offer(pair.score);
            if (!current || better(pair, *current)) {
                current = std::move(pair);
            }
        }
    }

    while (current && space.has_refinements(*current)) {
        const double potential = space.potential(*current, 1.0, top.threshold());
        if (!(potential > top.threshold())) {
            ++stats.nodes_pruned;
            break;
        }
        auto children = space.expand(*current);
        std::optional<SearchNode> best;
        for (auto& child : children) {
            ++stats.nodes_explored;
            stats.max_depth_reached = std::max(stats.max_depth_reached, child.size());
            top.offer(child.score);
            if (!best || better(child, *best)) {
                best = std::move(child);
            }
        }
        current = std::move(best);
    }
    detail::finish_stats(stats, top, data.size(), start);
    return result;
}

// Scores all 2^d - d - 1 subsets of at least two attributes from scratch.
// Reference for small d only.
inline TopKStore exhaustive_search(const EncodedDataset& data, std::size_t k, Estimator estimator = Estimator::relaxed)
{
    if (data.size() > 24) {
        throw UsageError("exhaustive_search: too many attributes");
    }
    TopKStore top(k);
    const std::size_t d = data.size();
    std::vector<std::size_t> members;
    for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << d); ++mask) {
        if ((mask & (mask - 1)) == 0) {
            continue;
        }
        members.clear();
        for (std::size_t j = 0; j < d; ++j) {
            if (mask >> j & 1u) {
                members.push_back(j);
            }
        }
        top.offer(score_subset(data, members, estimator));
    }
    return top;
}

} // namespace relcorr
