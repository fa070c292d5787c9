#pragma once

// Reference implementations used by the tests. They work from raw codes with
// std::map counting and naive formulas, independent of the library's
// partition and lattice machinery.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "relcorr/data.hpp"

namespace oracle {

using relcorr::Code;
using relcorr::EncodedDataset;

// Dataset with d columns, n rows; each column draws from a random domain in
// [1, max_domain]. Some columns copy or coarsen an earlier one so that real
// dependence shows up.
inline EncodedDataset random_dataset(std::mt19937_64& rng, std::size_t n, std::size_t d, std::uint32_t max_domain = 4)
{
    std::vector<std::vector<Code>> cols(d, std::vector<Code>(n));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) {
        names.push_back("A" + std::to_string(j));
        const Code dom = 1 + static_cast<Code>(rng() % max_domain);
        const int kind = j == 0 ? 0 : static_cast<int>(rng() % 4);
        const std::size_t src = j == 0 ? 0 : rng() % j;
        for (std::size_t i = 0; i < n; ++i) {
            Code v = static_cast<Code>(rng() % dom);
            if (kind == 1) {
                v = cols[src][i] % dom; // functional dependence
            } else if (kind == 2 && rng() % 3 != 0) {
                v = (cols[src][i] + 1) % dom; // noisy copy
            }
            cols[j][i] = v;
        }
    }
    return EncodedDataset::from_columns(names, cols);
}

inline double entropy_of(const std::map<std::vector<Code>, std::uint64_t>& counts, std::size_t n)
{
    double h = 0.0;
    for (const auto& [key, c] : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(n);
        h -= p * std::log2(p);
    }
    return h;
}

inline std::map<std::vector<Code>, std::uint64_t> joint_counts(const EncodedDataset& data,
                                                               const std::vector<std::size_t>& vars)
{
    std::map<std::vector<Code>, std::uint64_t> counts;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        std::vector<Code> key;
        for (std::size_t j : vars) {
            key.push_back(data[j].codes[i]);
        }
        ++counts[key];
    }
    return counts;
}

inline double joint_entropy(const EncodedDataset& data, const std::vector<std::size_t>& vars)
{
    return entropy_of(joint_counts(data, vars), data.rows());
}

inline std::vector<std::uint64_t> count_values(const std::map<std::vector<Code>, std::uint64_t>& counts)
{
    std::vector<std::uint64_t> out;
    for (const auto& [k, c] : counts) {
        out.push_back(c);
    }
    return out;
}

// Plug-in mutual information of two label sequences.
inline double mutual_information(const std::vector<int>& x, const std::vector<int>& y)
{
    const std::size_t n = x.size();
    std::map<int, double> px, py;
    std::map<std::pair<int, int>, double> pxy;
    for (std::size_t i = 0; i < n; ++i) {
        px[x[i]] += 1.0;
        py[y[i]] += 1.0;
        pxy[{x[i], y[i]}] += 1.0;
    }
    const double nd = static_cast<double>(n);
    double mi = 0.0;
    for (const auto& [k, c] : pxy) {
        mi += c / nd * std::log2(c * nd / (px[k.first] * py[k.second]));
    }
    return mi;
}

inline std::vector<int> expand_marginal(const std::vector<std::uint64_t>& counts)
{
    std::vector<int> labels;
    for (std::size_t v = 0; v < counts.size(); ++v) {
        labels.insert(labels.end(), counts[v], static_cast<int>(v));
    }
    return labels;
}

// Mean plug-in MI over all n! orderings of y against fixed x. Permuting the
// multiset of y labels visits each distinct arrangement once; every distinct
// arrangement stands for the same number of raw permutations, so the mean is
// unchanged.
inline double permutation_mean_mi(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b)
{
    const auto x = expand_marginal(a);
    auto y = expand_marginal(b);
    std::sort(y.begin(), y.end());
    double sum = 0.0;
    std::uint64_t count = 0;
    do {
        sum += mutual_information(x, y);
        ++count;
    } while (std::next_permutation(y.begin(), y.end()));
    return sum / static_cast<double>(count);
}

// Random composition of n into k positive parts.
inline std::vector<std::uint64_t> random_marginal(std::mt19937_64& rng, std::uint64_t n, std::size_t k)
{
    k = std::max<std::size_t>(1, std::min<std::size_t>(k, n));
    std::vector<std::uint64_t> cuts;
    std::vector<std::uint64_t> pool(n - 1);
    std::iota(pool.begin(), pool.end(), 1);
    std::shuffle(pool.begin(), pool.end(), rng);
    cuts.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1));
    std::sort(cuts.begin(), cuts.end());
    std::vector<std::uint64_t> parts;
    std::uint64_t prev = 0;
    for (auto c : cuts) {
        parts.push_back(c - prev);
        prev = c;
    }
    parts.push_back(n - prev);
    return parts;
}

// All subsets of {0..d-1} with at least two members, as ascending vectors.
inline std::vector<std::vector<std::size_t>> subsets(std::size_t d)
{
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
        std::vector<std::size_t> s;
        for (std::size_t j = 0; j < d; ++j) {
            if (mask >> j & 1u) {
                s.push_back(j);
            }
        }
        if (s.size() >= 2) {
            out.push_back(s);
        }
    }
    return out;
}

} // namespace oracle
