#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace relcorr {

// Plug-in Shannon entropy in bits of a histogram whose counts sum to n.
// Counts are summed in ascending order so that any permutation of the same
// histogram yields a bit-identical result; the search relies on this to make
// incrementally computed scores equal to from-scratch ones.
template <typename Count>
double entropy(std::span<const Count> counts, std::uint64_t n)
{
    if (n == 0) {
        return 0.0;
    }
    std::vector<Count> sorted(counts.begin(), counts.end());
    std::sort(sorted.begin(), sorted.end());
    // A single occupied cell is exactly 0; log2(n) - n log2(n)/n can round to
    // ~1e-15 and would make a constant column look informative.
    if (sorted.size() < 2 || sorted[sorted.size() - 2] == 0) {
        return 0.0;
    }
    double acc = 0.0;
    for (Count c : sorted) {
        if (c > 1) {
            const double x = static_cast<double>(c);
            acc += x * std::log2(x);
        }
    }
    const double nd = static_cast<double>(n);
    const double h = std::log2(nd) - acc / nd;
    return h > 0.0 ? h : 0.0;
}

template <typename Count>
double entropy(const std::vector<Count>& counts, std::uint64_t n)
{
    return entropy(std::span<const Count>(counts), n);
}

} // namespace relcorr
