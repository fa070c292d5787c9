#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "relcorr/data.hpp"
#include "relcorr/entropy.hpp"
#include "relcorr/error.hpp"

namespace relcorr {

// Grouping of the rows into the distinct joint values of an attribute set.
// Cell ids are dense and assigned in order of first occurrence.
struct RowPartition {
    std::vector<std::uint32_t> cell_of_row;
    std::vector<std::uint64_t> cell_counts;

    [[nodiscard]] std::size_t cell_count() const noexcept { return cell_counts.size(); }
    [[nodiscard]] std::size_t rows() const noexcept { return cell_of_row.size(); }
    [[nodiscard]] double entropy() const { return relcorr::entropy(cell_counts, cell_of_row.size()); }
    [[nodiscard]] std::size_t bytes() const noexcept
    {
        return cell_of_row.capacity() * sizeof(std::uint32_t) + cell_counts.capacity() * sizeof(std::uint64_t);
    }

    // The partition of the empty attribute set: every row in one cell.
    static RowPartition whole(std::size_t n)
    {
        RowPartition p;
        p.cell_of_row.assign(n, 0);
        p.cell_counts.assign(n > 0 ? 1 : 0, n);
        return p;
    }
};

// Splits every cell of `parent` by the codes of `attr`.
inline RowPartition refine_partition(const RowPartition& parent, const Attribute& attr)
{
    const std::size_t n = parent.rows();
    if (attr.codes.size() != n) {
        throw UsageError("refine_partition: attribute length differs from partition");
    }
    RowPartition out;
    out.cell_of_row.resize(n);
    constexpr std::uint32_t unset = std::numeric_limits<std::uint32_t>::max();
    const std::uint64_t span = static_cast<std::uint64_t>(parent.cell_count()) * attr.domain_size;

    if (span <= std::max<std::uint64_t>(8 * n, 1u << 16)) {
        std::vector<std::uint32_t> slot(span, unset);
        for (std::size_t r = 0; r < n; ++r) {
            const std::uint64_t key = static_cast<std::uint64_t>(parent.cell_of_row[r]) * attr.domain_size + attr.codes[r];
            auto& id = slot[key];
            if (id == unset) {
                id = static_cast<std::uint32_t>(out.cell_counts.size());
                out.cell_counts.push_back(0);
            }
            ++out.cell_counts[id];
            out.cell_of_row[r] = id;
        }
    } else {
        std::unordered_map<std::uint64_t, std::uint32_t> slot;
        slot.reserve(std::min<std::uint64_t>(span, n));
        for (std::size_t r = 0; r < n; ++r) {
            const std::uint64_t key = static_cast<std::uint64_t>(parent.cell_of_row[r]) * attr.domain_size + attr.codes[r];
            auto [it, inserted] = slot.try_emplace(key, static_cast<std::uint32_t>(out.cell_counts.size()));
            if (inserted) {
                out.cell_counts.push_back(0);
            }
            ++out.cell_counts[it->second];
            out.cell_of_row[r] = it->second;
        }
    }
    return out;
}

inline RowPartition partition_of(const EncodedDataset& data, std::span<const std::size_t> members)
{
    RowPartition p = RowPartition::whole(data.rows());
    for (std::size_t j : members) {
        p = refine_partition(p, data[j]);
    }
    return p;
}

// log(k!) for k = 0..n.
class LogFactorials {
public:
    explicit LogFactorials(std::uint64_t n) : table_(n + 1)
    {
        for (std::uint64_t k = 0; k <= n; ++k) {
            table_[k] = std::lgamma(static_cast<double>(k) + 1.0);
        }
    }
    [[nodiscard]] double operator()(std::uint64_t k) const { return table_[k]; }
    [[nodiscard]] std::uint64_t limit() const noexcept { return table_.size() - 1; }

private:
    std::vector<double> table_;
};

namespace detail {

template <typename A, typename B>
double expected_mi_permutation(std::span<const A> a, std::span<const B> b, std::uint64_t n, const LogFactorials& lf)
{
    const double nd = static_cast<double>(n);
    const double log_n_fact = lf(n);
    double total = 0.0;
    for (A ai_raw : a) {
        const auto ai = static_cast<std::uint64_t>(ai_raw);
        if (ai == 0) {
            continue;
        }
        for (B bj_raw : b) {
            const auto bj = static_cast<std::uint64_t>(bj_raw);
            if (bj == 0) {
                continue;
            }
            const std::uint64_t lo = std::max<std::uint64_t>(1, ai + bj > n ? ai + bj - n : 0);
            const std::uint64_t hi = std::min(ai, bj);
            const double base = lf(ai) + lf(bj) + lf(n - ai) + lf(n - bj) - log_n_fact;
            const double log_ab = std::log2(static_cast<double>(ai) * static_cast<double>(bj));
            for (std::uint64_t c = lo; c <= hi; ++c) {
                const double log_p = base - lf(c) - lf(ai - c) - lf(bj - c) - lf(n - ai - bj + c);
                const double cd = static_cast<double>(c);
                total += (cd / nd) * (std::log2(nd * cd) - log_ab) * std::exp(log_p);
            }
        }
    }
    return total > 0.0 ? total : 0.0;
}

} // namespace detail

// Expected plug-in mutual information (bits) of two variables with the given
// marginal counts under the permutation model, i.e. the mean of I(X; Y_sigma)
// over all n! row permutations sigma of Y.
template <typename A, typename B>
double expected_mi_permutation(std::span<const A> a, std::span<const B> b, std::uint64_t n)
{
    std::uint64_t sa = 0;
    std::uint64_t sb = 0;
    for (A x : a) {
        sa += static_cast<std::uint64_t>(x);
    }
    for (B x : b) {
        sb += static_cast<std::uint64_t>(x);
    }
    if (sa != n || sb != n) {
        throw UsageError("expected_mi_permutation: marginals must both sum to n");
    }
    if (n == 0) {
        return 0.0;
    }
    const LogFactorials lf(n);
    return detail::expected_mi_permutation(a, b, n, lf);
}

inline double expected_mi_permutation(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
                                      std::uint64_t n)
{
    return expected_mi_permutation(std::span<const std::uint64_t>(a), std::span<const std::uint64_t>(b), n);
}

inline void require_rows(std::uint64_t n)
{
    if (n < 2) {
        throw UsageError("sample size must be >= 2");
    }
}

// Upper bound on the permutation-model expectation from the two domain sizes:
// log2((n + dx*dy - dx - dy) / (n - 1)).
inline double m0_upper(std::uint64_t dx, std::uint64_t dy, std::uint64_t n)
{
    require_rows(n);
    if (dx < 1 || dy < 1) {
        throw UsageError("m0_upper: domain sizes must be >= 1");
    }
    const double num = static_cast<double>(n) + static_cast<double>(dx) * static_cast<double>(dy) -
                       static_cast<double>(dx) - static_cast<double>(dy);
    return std::log2(num) - std::log2(static_cast<double>(n - 1));
}

// Relaxed bound log2((n + P*dnext) / (n - 1)) where log2(P) is given. Past 63
// bits of joint product the n summand is folded into a log1p term.
inline double m0_relaxed(double log2_prefix_product, std::uint64_t dnext, std::uint64_t n)
{
    require_rows(n);
    if (dnext < 1) {
        throw UsageError("m0_relaxed: domain size must be >= 1");
    }
    if (log2_prefix_product < 0.0) {
        throw UsageError("m0_relaxed: prefix product must be >= 1");
    }
    const double nd = static_cast<double>(n);
    const double bits = log2_prefix_product + std::log2(static_cast<double>(dnext));
    const double log_denominator = std::log2(nd - 1.0);
    if (bits > 63.0) {
        return bits + std::log1p(nd * std::exp2(-bits)) / std::numbers::ln2 - log_denominator;
    }
    return std::log2(nd + std::exp2(bits)) - log_denominator;
}

// Numerator of the relaxed correction: the sum of m0_relaxed terms along the
// ordering by decreasing domain size, which maximizes that sum over all
// orderings. Products are kept exact while they fit in a double mantissa.
inline double relaxed_correction_sum(std::span<const std::uint64_t> domain_sizes, std::uint64_t n)
{
    require_rows(n);
    if (domain_sizes.size() < 2) {
        return 0.0;
    }
    std::vector<std::uint64_t> sizes(domain_sizes.begin(), domain_sizes.end());
    std::sort(sizes.begin(), sizes.end(), std::greater<>());
    const double nd = static_cast<double>(n);
    const double log_denominator = std::log2(nd - 1.0);
    constexpr double exact_limit = 9007199254740992.0; // 2^53

    double product = static_cast<double>(sizes[0]);
    double bits = std::log2(product);
    bool exact = true;
    double sum = 0.0;
    for (std::size_t i = 1; i < sizes.size(); ++i) {
        const double d = static_cast<double>(sizes[i]);
        if (exact && product * d <= exact_limit) {
            product *= d;
            sum += std::log2(nd + product) - log_denominator;
        } else {
            exact = false;
            sum += m0_relaxed(bits, sizes[i], n);
        }
        bits += std::log2(d);
    }
    return sum;
}

// Relaxed correction term: relaxed_correction_sum / W_norm. nullopt when the
// normalizer is not positive, in which case the degenerate-score rule applies.
inline std::optional<double> correction_relaxed(std::span<const std::uint64_t> domain_sizes, std::uint64_t n,
                                                double w_norm)
{
    if (domain_sizes.size() < 2) {
        throw UsageError("correction_relaxed: need at least two domain sizes");
    }
    if (!(w_norm > 0.0)) {
        return std::nullopt;
    }
    return relaxed_correction_sum(domain_sizes, n) / w_norm;
}

// Joint partitions of every subset of a small attribute set, plus the
// maximization over orderings of the exact and domain-bounded corrections.
// Subsets are bitmasks over `vars`. Intended for m <= 12 or so.
class SubsetLattice {
public:
    static constexpr std::size_t max_vars = 16;

    SubsetLattice(const EncodedDataset& data, std::vector<std::size_t> vars) : data_(&data), vars_(std::move(vars))
    {
        if (vars_.size() > max_vars) {
            throw UsageError("SubsetLattice: too many variables");
        }
        const std::size_t count = std::size_t{1} << vars_.size();
        partitions_.resize(count);
        partitions_[0] = RowPartition::whole(data.rows());
        for (std::size_t mask = 1; mask < count; ++mask) {
            const std::size_t top = highest_bit(mask);
            partitions_[mask] = refine_partition(partitions_[mask ^ (std::size_t{1} << top)], data[vars_[top]]);
        }
    }

    [[nodiscard]] std::size_t var_count() const noexcept { return vars_.size(); }
    [[nodiscard]] const std::vector<std::size_t>& vars() const noexcept { return vars_; }
    [[nodiscard]] const RowPartition& partition(std::size_t mask) const { return partitions_[mask]; }

    // max over orderings of sum_i m0(prefix_{i-1}, X_i) for every subset.
    [[nodiscard]] std::vector<double> exact_numerators() const
    {
        const LogFactorials lf(data_->rows());
        return maximize_over_orderings([&](std::size_t prefix, std::size_t bit) {
            const auto& a = partitions_[prefix].cell_counts;
            const auto& b = partitions_[std::size_t{1} << bit].cell_counts;
            return detail::expected_mi_permutation(std::span<const std::uint64_t>(a), std::span<const std::uint64_t>(b),
                                                   data_->rows(), lf);
        });
    }

    // Same maximization with m0_upper on observed (joint) domain sizes.
    [[nodiscard]] std::vector<double> upper_numerators() const
    {
        return maximize_over_orderings([&](std::size_t prefix, std::size_t bit) {
            return m0_upper(partitions_[prefix].cell_count(), partitions_[std::size_t{1} << bit].cell_count(),
                            data_->rows());
        });
    }

    static std::size_t highest_bit(std::size_t mask)
    {
        std::size_t b = 0;
        while (mask >>= 1) {
            ++b;
        }
        return b;
    }

private:
    template <typename Term>
    std::vector<double> maximize_over_orderings(Term term) const
    {
        const std::size_t count = partitions_.size();
        std::vector<double> best(count, 0.0);
        for (std::size_t mask = 1; mask < count; ++mask) {
            if ((mask & (mask - 1)) == 0) {
                continue;
            }
            double value = -std::numeric_limits<double>::infinity();
            for (std::size_t bit = 0; bit < vars_.size(); ++bit) {
                const std::size_t b = std::size_t{1} << bit;
                if (mask & b) {
                    value = std::max(value, best[mask ^ b] + term(mask ^ b, bit));
                }
            }
            best[mask] = value;
        }
        return best;
    }

    const EncodedDataset* data_;
    std::vector<std::size_t> vars_;
    std::vector<RowPartition> partitions_;
};

enum class Estimator { plugin, exact, upper, relaxed };

inline std::string_view to_string(Estimator e)
{
    switch (e) {
    case Estimator::plugin: return "plugin";
    case Estimator::exact: return "exact";
    case Estimator::upper: return "upper";
    case Estimator::relaxed: return "relaxed";
    }
    return "?";
}

inline Estimator parse_estimator(std::string_view s)
{
    if (s == "plugin") return Estimator::plugin;
    if (s == "exact") return Estimator::exact;
    if (s == "upper") return Estimator::upper;
    if (s == "relaxed") return Estimator::relaxed;
    throw UsageError("unknown estimator '" + std::string(s) + "' (expected plugin|exact|upper|relaxed)");
}

// Largest subset the factorial-time corrections accept.
inline constexpr std::size_t oracle_max_members = 8;

// Score components of one attribute subset. Entropies in bits.
struct SubsetScore {
    // Attribute indices in decreasing-entropy order (ties by index).
    std::vector<std::size_t> members;
    Estimator estimator = Estimator::relaxed;
    double entropy_sum = 0.0;
    double entropy_max = 0.0;
    double joint_entropy = 0.0;
    std::uint64_t joint_cells = 0;
    // Plug-in total correlation and its maximal value for these marginals.
    double total_correlation = 0.0;
    double normalizer = 0.0;
    double w_hat = 0.0;
    double t_relaxed = 0.0;
    // w_hat - t_relaxed, the production score.
    double w_corrected = 0.0;
    // Correction used by `estimator` (0 for plugin) and the resulting score.
    double correction = 0.0;
    double value = 0.0;

    [[nodiscard]] bool degenerate() const noexcept { return !(normalizer > 0.0); }
};

// Sorts attribute indices by decreasing entropy, ties by ascending index.
inline void sort_by_entropy(const EncodedDataset& data, std::vector<std::size_t>& idx)
{
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (data[a].entropy != data[b].entropy) {
            return data[a].entropy > data[b].entropy;
        }
        return a < b;
    });
}

namespace detail {

// Fills the plug-in and relaxed components from already known entropies.
// `members` must be in decreasing-entropy order and `entropy_sum` summed in
// that order so that every route to the same subset is bit-identical.
inline SubsetScore finish_score(const EncodedDataset& data, std::vector<std::size_t> members, double entropy_sum,
                                double joint_entropy, std::uint64_t joint_cells)
{
    SubsetScore s;
    s.members = std::move(members);
    s.estimator = Estimator::relaxed;
    s.entropy_sum = entropy_sum;
    s.entropy_max = s.members.empty() ? 0.0 : data[s.members.front()].entropy;
    s.joint_entropy = joint_entropy;
    s.joint_cells = joint_cells;
    s.total_correlation = entropy_sum - joint_entropy;
    s.normalizer = entropy_sum - s.entropy_max;
    if (s.members.size() < 2 || s.degenerate()) {
        return s;
    }
    s.w_hat = std::clamp(s.total_correlation / s.normalizer, 0.0, 1.0);
    std::vector<std::uint64_t> sizes;
    sizes.reserve(s.members.size());
    for (std::size_t j : s.members) {
        sizes.push_back(data[j].domain_size);
    }
    s.t_relaxed = relaxed_correction_sum(sizes, data.rows()) / s.normalizer;
    s.w_corrected = s.w_hat - s.t_relaxed;
    s.correction = s.t_relaxed;
    s.value = s.w_corrected;
    return s;
}

inline std::vector<std::size_t> checked_members(const EncodedDataset& data, std::span<const std::size_t> members)
{
    std::vector<std::size_t> m(members.begin(), members.end());
    for (std::size_t j : m) {
        if (j >= data.size()) {
            throw UsageError("attribute index " + std::to_string(j) + " out of range");
        }
    }
    std::vector<std::size_t> check = m;
    std::sort(check.begin(), check.end());
    if (std::adjacent_find(check.begin(), check.end()) != check.end()) {
        throw UsageError("subset members must be distinct");
    }
    sort_by_entropy(data, m);
    return m;
}

inline double entropy_sum(const EncodedDataset& data, std::span<const std::size_t> ordered)
{
    double sum = 0.0;
    for (std::size_t j : ordered) {
        sum += data[j].entropy;
    }
    return sum;
}

inline std::optional<double> ordered_correction(const EncodedDataset& data, std::span<const std::size_t> members,
                                                bool exact)
{
    auto m = checked_members(data, members);
    if (m.size() < 2) {
        throw UsageError("correction needs at least two members");
    }
    if (m.size() > oracle_max_members) {
        throw UsageError("exact/upper corrections are limited to " + std::to_string(oracle_max_members) +
                         " members (factorial cost)");
    }
    double w_norm = entropy_sum(data, m) - data[m.front()].entropy;
    if (!(w_norm > 0.0)) {
        return std::nullopt;
    }
    SubsetLattice lattice(data, m);
    const auto full = (std::size_t{1} << m.size()) - 1;
    const auto num = exact ? lattice.exact_numerators() : lattice.upper_numerators();
    return num[full] / w_norm;
}

} // namespace detail

// Correction maximizing the sum of exact permutation-model expectations over
// all orderings of the members (at most oracle_max_members). nullopt when
// the normalizer is zero.
inline std::optional<double> correction_exact(const EncodedDataset& data, std::span<const std::size_t> members)
{
    return detail::ordered_correction(data, members, true);
}

// As correction_exact with each term replaced by m0_upper on observed joint
// domain sizes of the prefix.
inline std::optional<double> correction_upper(const EncodedDataset& data, std::span<const std::size_t> members)
{
    return detail::ordered_correction(data, members, false);
}

// Scores `members` (any order) under `estimator`. Sets of fewer than two
// attributes and sets whose normalizer is zero score 0.
inline SubsetScore score_subset(const EncodedDataset& data, std::span<const std::size_t> members,
                                Estimator estimator = Estimator::relaxed)
{
    auto m = detail::checked_members(data, members);
    const RowPartition joint = partition_of(data, m);
    const double hsum = detail::entropy_sum(data, m);
    SubsetScore s = detail::finish_score(data, std::move(m), hsum, joint.entropy(), joint.cell_count());
    s.estimator = estimator;
    if (s.members.size() < 2 || s.degenerate()) {
        return s;
    }
    switch (estimator) {
    case Estimator::plugin: s.correction = 0.0; break;
    case Estimator::relaxed: s.correction = s.t_relaxed; break;
    case Estimator::exact: s.correction = *correction_exact(data, s.members); break;
    case Estimator::upper: s.correction = *correction_upper(data, s.members); break;
    }
    s.value = s.w_hat - s.correction;
    return s;
}

inline SubsetScore score_subset(const EncodedDataset& data, std::initializer_list<std::size_t> members,
                                Estimator estimator = Estimator::relaxed)
{
    return score_subset(data, std::span<const std::size_t>(members.begin(), members.size()), estimator);
}

} // namespace relcorr
