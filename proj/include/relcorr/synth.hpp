#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "relcorr/data.hpp"
#include "relcorr/error.hpp"
#include "relcorr/estimators.hpp"

namespace relcorr {

// Probability table over variables with the given domain sizes, row-major
// (the last variable varies fastest).
struct JointTable {
    std::vector<std::uint32_t> dims;
    std::vector<double> probs;

    [[nodiscard]] std::size_t variables() const noexcept { return dims.size(); }
};

inline double entropy_of_probs(const std::vector<double>& p)
{
    double h = 0.0;
    for (double x : p) {
        if (x > 0.0) {
            h -= x * std::log2(x);
        }
    }
    return h > 0.0 ? h : 0.0;
}

// Marginal distribution of `vars` (ascending variable indices).
inline std::vector<double> marginal(const JointTable& joint, const std::vector<std::size_t>& vars)
{
    const std::size_t m = joint.dims.size();
    std::vector<std::size_t> stride(m, 1);
    for (std::size_t v = m; v-- > 1;) {
        stride[v - 1] = stride[v] * joint.dims[v];
    }
    std::size_t out_size = 1;
    for (std::size_t v : vars) {
        out_size *= joint.dims[v];
    }
    std::vector<double> out(out_size, 0.0);
    for (std::size_t cell = 0; cell < joint.probs.size(); ++cell) {
        std::size_t key = 0;
        for (std::size_t v : vars) {
            key = key * joint.dims[v] + (cell / stride[v]) % joint.dims[v];
        }
        out[key] += joint.probs[cell];
    }
    return out;
}

// Normalized total correlation of `vars` under the exact distribution; 0 for
// singletons and whenever the normalizer vanishes.
inline double population_w(const JointTable& joint, std::vector<std::size_t> vars)
{
    if (vars.empty()) {
        throw UsageError("population_w: empty subset");
    }
    std::sort(vars.begin(), vars.end());
    if (vars.size() < 2) {
        return 0.0;
    }
    double sum = 0.0;
    double max = 0.0;
    for (std::size_t v : vars) {
        const double h = entropy_of_probs(marginal(joint, {v}));
        sum += h;
        max = std::max(max, h);
    }
    const double normalizer = sum - max;
    if (!(normalizer > 1e-12)) {
        return 0.0;
    }
    const double w = (sum - entropy_of_probs(marginal(joint, vars))) / normalizer;
    return std::clamp(w, 0.0, 1.0);
}

// Product distribution joint(A) x uniform over `count` extra variables.
inline JointTable append_uniform(const JointTable& joint, std::size_t count, std::uint32_t domain)
{
    JointTable out;
    out.dims = joint.dims;
    std::size_t extra = 1;
    for (std::size_t i = 0; i < count; ++i) {
        out.dims.push_back(domain);
        extra *= domain;
    }
    out.probs.reserve(joint.probs.size() * extra);
    const double u = 1.0 / static_cast<double>(extra);
    for (double p : joint.probs) {
        for (std::size_t e = 0; e < extra; ++e) {
            out.probs.push_back(p * u);
        }
    }
    return out;
}

// Half-open [lo, hi) unless hi_inclusive.
struct Band {
    double lo = 0.0;
    double hi = 1.0;
    bool hi_inclusive = false;

    [[nodiscard]] bool contains(double w) const noexcept { return w >= lo && (hi_inclusive ? w <= hi : w < hi); }
    [[nodiscard]] std::string label() const
    {
        std::ostringstream os;
        os << "[" << lo << "," << hi << (hi_inclusive ? "]" : ")");
        return os.str();
    }
};

class SamplingError : public DataError {
public:
    explicit SamplingError(const std::string& what) : DataError(what) {}
};

// Rejection sampler: cell probabilities uniform on the simplex (unit
// Dirichlet), accepted once the full-table w falls in `band`.
inline JointTable sample_joint_in_band(std::size_t d, const Band& band, std::uint64_t seed, std::size_t max_attempts,
                                       std::uint32_t domain = 3)
{
    if (d < 2) {
        throw UsageError("sample_joint_in_band: need d >= 2");
    }
    if (!(band.lo >= 0.0 && band.lo < band.hi && band.hi <= 1.0)) {
        throw UsageError("sample_joint_in_band: band must satisfy 0 <= lo < hi <= 1");
    }
    JointTable t;
    t.dims.assign(d, domain);
    std::size_t cells = 1;
    for (std::size_t i = 0; i < d; ++i) {
        cells *= domain;
    }
    t.probs.resize(cells);
    std::vector<std::size_t> all(d);
    std::iota(all.begin(), all.end(), std::size_t{0});

    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> gamma1(1.0);
    std::array<std::size_t, 10> histogram{};
    for (std::size_t attempt = 0; attempt < max_attempts; ++attempt) {
        double total = 0.0;
        for (auto& p : t.probs) {
            p = gamma1(rng);
            total += p;
        }
        for (auto& p : t.probs) {
            p /= total;
        }
        const double w = population_w(t, all);
        if (band.contains(w)) {
            return t;
        }
        ++histogram[std::min<std::size_t>(9, static_cast<std::size_t>(w * 10.0))];
    }
    std::ostringstream msg;
    msg << "no distribution with w in " << band.label() << " after " << max_attempts << " attempts; achieved w histogram:";
    for (std::size_t b = 0; b < histogram.size(); ++b) {
        msg << " [" << b / 10.0 << "," << (b + 1) / 10.0 << "):" << histogram[b];
    }
    throw SamplingError(msg.str());
}

// A dependent joint table extended by independent uniform variables, with the
// exact w of every subset (indexed by bitmask over all variables).
struct SyntheticSpec {
    JointTable dependent;
    std::size_t n_independent = 3;
    std::uint32_t independent_domain = 3;
    JointTable full;
    std::vector<double> population;

    [[nodiscard]] std::size_t variables() const noexcept { return full.variables(); }
};

inline SyntheticSpec make_synthetic_spec(JointTable dependent, std::size_t n_independent = 3,
                                         std::uint32_t independent_domain = 3)
{
    SyntheticSpec spec;
    spec.full = append_uniform(dependent, n_independent, independent_domain);
    spec.dependent = std::move(dependent);
    spec.n_independent = n_independent;
    spec.independent_domain = independent_domain;
    const std::size_t vars = spec.full.variables();
    if (vars > 16) {
        throw UsageError("synthetic spec: too many variables for exhaustive evaluation");
    }
    spec.population.assign(std::size_t{1} << vars, 0.0);
    for (std::size_t mask = 1; mask < spec.population.size(); ++mask) {
        std::vector<std::size_t> members;
        for (std::size_t v = 0; v < vars; ++v) {
            if (mask >> v & 1u) {
                members.push_back(v);
            }
        }
        spec.population[mask] = population_w(spec.full, members);
    }
    return spec;
}

// n i.i.d. rows from spec.full as a dataset with columns X1..Xm.
template <typename Rng>
EncodedDataset sample_dataset(const SyntheticSpec& spec, std::size_t n, Rng& rng)
{
    const auto& t = spec.full;
    std::discrete_distribution<std::size_t> cell(t.probs.begin(), t.probs.end());
    const std::size_t m = t.variables();
    std::vector<std::vector<std::uint32_t>> columns(m, std::vector<std::uint32_t>(n));
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t c = cell(rng);
        for (std::size_t v = m; v-- > 0;) {
            columns[v][r] = static_cast<std::uint32_t>(c % t.dims[v]);
            c /= t.dims[v];
        }
    }
    std::vector<std::string> names;
    for (std::size_t v = 0; v < m; ++v) {
        names.push_back("X" + std::to_string(v + 1));
    }
    return EncodedDataset::from_columns(names, columns);
}

// Score used to pick a winner in a regret trial: one of the four estimators,
// or the population value itself (a zero-regret reference).
enum class RegretScorer { plugin, exact, upper, relaxed, population };

inline RegretScorer parse_regret_scorer(std::string_view s)
{
    if (s == "population") {
        return RegretScorer::population;
    }
    switch (parse_estimator(s)) {
    case Estimator::plugin: return RegretScorer::plugin;
    case Estimator::exact: return RegretScorer::exact;
    case Estimator::upper: return RegretScorer::upper;
    case Estimator::relaxed: return RegretScorer::relaxed;
    }
    return RegretScorer::relaxed;
}

inline std::string_view to_string(RegretScorer s)
{
    switch (s) {
    case RegretScorer::plugin: return "plugin";
    case RegretScorer::exact: return "exact";
    case RegretScorer::upper: return "upper";
    case RegretScorer::relaxed: return "relaxed";
    case RegretScorer::population: return "population";
    }
    return "?";
}

struct RegretCurve {
    std::string estimator;
    std::vector<std::size_t> sample_sizes;
    std::vector<double> mean_regret;
    std::vector<double> stderr_regret;
    // Per sample size, the regret of every trial.
    std::vector<std::vector<double>> regrets;
    std::size_t trials = 0;
};

inline double mean_of(const std::vector<double>& v)
{
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double stderr_of(const std::vector<double>& v)
{
    if (v.size() < 2) {
        return 0.0;
    }
    const double mean = mean_of(v);
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1)) / std::sqrt(static_cast<double>(v.size()));
}

namespace detail {

inline std::vector<std::size_t> mask_members(std::size_t mask, std::size_t vars)
{
    std::vector<std::size_t> out;
    for (std::size_t v = 0; v < vars; ++v) {
        if (mask >> v & 1u) {
            out.push_back(v);
        }
    }
    return out;
}

// Scores of every subset (bitmask) of `data` under each requested scorer.
inline std::map<RegretScorer, std::vector<double>> score_all_subsets(const EncodedDataset& data,
                                                                     const std::vector<RegretScorer>& scorers,
                                                                     const std::vector<double>& population)
{
    const std::size_t vars = data.size();
    std::vector<std::size_t> identity(vars);
    std::iota(identity.begin(), identity.end(), std::size_t{0});
    const SubsetLattice lattice(data, identity);
    const std::size_t count = std::size_t{1} << vars;

    bool need_exact = false;
    bool need_upper = false;
    for (auto s : scorers) {
        need_exact |= s == RegretScorer::exact;
        need_upper |= s == RegretScorer::upper;
    }
    const auto exact_num = need_exact ? lattice.exact_numerators() : std::vector<double>{};
    const auto upper_num = need_upper ? lattice.upper_numerators() : std::vector<double>{};

    std::map<RegretScorer, std::vector<double>> out;
    for (auto s : scorers) {
        out[s].assign(count, 0.0);
    }
    for (std::size_t mask = 1; mask < count; ++mask) {
        if ((mask & (mask - 1)) == 0) {
            continue;
        }
        auto members = mask_members(mask, vars);
        sort_by_entropy(data, members);
        const double hsum = entropy_sum(data, members);
        const auto& part = lattice.partition(mask);
        const SubsetScore score = finish_score(data, members, hsum, part.entropy(), part.cell_count());
        for (auto s : scorers) {
            double v = 0.0;
            if (!score.degenerate()) {
                switch (s) {
                case RegretScorer::plugin: v = score.w_hat; break;
                case RegretScorer::relaxed: v = score.w_corrected; break;
                case RegretScorer::exact: v = score.w_hat - exact_num[mask] / score.normalizer; break;
                case RegretScorer::upper: v = score.w_hat - upper_num[mask] / score.normalizer; break;
                case RegretScorer::population: v = population[mask]; break;
                }
            } else if (s == RegretScorer::population) {
                v = population[mask];
            }
            out[s][mask] = v;
        }
    }
    return out;
}

// Mask with the highest score among subsets of size >= 2; ties go to the
// lexicographically smallest ascending member tuple.
inline std::size_t argmax_subset(const std::vector<double>& scores, std::size_t vars)
{
    std::size_t best = 0;
    std::vector<std::size_t> best_members;
    for (std::size_t mask = 1; mask < scores.size(); ++mask) {
        if ((mask & (mask - 1)) == 0) {
            continue;
        }
        auto members = mask_members(mask, vars);
        if (best == 0 || scores[mask] > scores[best] || (scores[mask] == scores[best] && members < best_members)) {
            best = mask;
            best_members = std::move(members);
        }
    }
    return best;
}

} // namespace detail

// Regret of each scorer: for every sample size and trial a dataset is drawn
// from the spec, the scorer is maximized exhaustively over all subsets of at
// least two variables, and the population w of its winner is compared with
// the population optimum. Trial t at size n uses the seed (seed, n, t).
inline std::map<std::string, RegretCurve> run_regret(const SyntheticSpec& spec, const std::vector<std::string>& scorers,
                                                     const std::vector<std::size_t>& sample_sizes, std::size_t trials,
                                                     std::uint64_t seed)
{
    if (trials < 1) {
        throw UsageError("run_regret: trials must be >= 1");
    }
    const std::size_t vars = spec.variables();
    if (vars > 12) {
        throw UsageError("run_regret: exhaustive search limited to 12 variables");
    }
    std::vector<RegretScorer> parsed;
    for (const auto& s : scorers) {
        parsed.push_back(parse_regret_scorer(s));
        const bool factorial = parsed.back() == RegretScorer::exact || parsed.back() == RegretScorer::upper;
        if (factorial && vars > oracle_max_members) {
            throw UsageError("exact/upper estimators are limited to " + std::to_string(oracle_max_members) + " variables");
        }
    }
    for (std::size_t n : sample_sizes) {
        if (n < 2) {
            throw UsageError("run_regret: sample sizes must be >= 2");
        }
    }

    double best_population = 0.0;
    for (std::size_t mask = 1; mask < spec.population.size(); ++mask) {
        if ((mask & (mask - 1)) != 0) {
            best_population = std::max(best_population, spec.population[mask]);
        }
    }

    std::map<std::string, RegretCurve> curves;
    for (auto s : parsed) {
        auto& c = curves[std::string(to_string(s))];
        c.estimator = std::string(to_string(s));
        c.sample_sizes = sample_sizes;
        c.trials = trials;
        c.regrets.assign(sample_sizes.size(), {});
    }

    for (std::size_t ni = 0; ni < sample_sizes.size(); ++ni) {
        const std::size_t n = sample_sizes[ni];
        for (std::size_t trial = 0; trial < trials; ++trial) {
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(trial)};
            std::mt19937_64 rng(seq);
            const EncodedDataset data = sample_dataset(spec, n, rng);
            const auto scores = detail::score_all_subsets(data, parsed, spec.population);
            for (auto s : parsed) {
                const std::size_t winner = detail::argmax_subset(scores.at(s), vars);
                const double regret = std::max(0.0, best_population - spec.population[winner]);
                curves[std::string(to_string(s))].regrets[ni].push_back(regret);
            }
        }
    }
    for (auto& [name, c] : curves) {
        for (const auto& r : c.regrets) {
            c.mean_regret.push_back(mean_of(r));
            c.stderr_regret.push_back(stderr_of(r));
        }
    }
    return curves;
}

struct ChanceRow {
    std::size_t cardinality = 0;
    // Plug-in total correlation of the first `cardinality` variables (bits).
    double plugin = 0.0;
    // Plug-in minus the relaxed chance correction, in bits.
    double corrected = 0.0;
    double plugin_normalized = 0.0;
    double corrected_normalized = 0.0;
};

// Independent uniform variables; total correlation along the chain X1, X1X2,
// ... estimated with and without the chance correction.
inline std::vector<ChanceRow> chance_demo(std::size_t d = 10, std::uint32_t domain = 4, std::size_t n = 1000,
                                          std::uint64_t seed = 1)
{
    if (d < 2 || domain < 1 || n < 2) {
        throw UsageError("chance_demo: need d >= 2, domain >= 1, n >= 2");
    }
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> value(0, domain - 1);
    std::vector<std::vector<std::uint32_t>> columns(d, std::vector<std::uint32_t>(n));
    std::vector<std::string> names;
    for (std::size_t j = 0; j < d; ++j) {
        names.push_back("X" + std::to_string(j + 1));
        for (auto& v : columns[j]) {
            v = value(rng);
        }
    }
    const auto data = EncodedDataset::from_columns(names, columns);

    std::vector<ChanceRow> rows;
    RowPartition joint = partition_of(data, std::vector<std::size_t>{0});
    for (std::size_t k = 2; k <= d; ++k) {
        joint = refine_partition(joint, data[k - 1]);
        std::vector<std::size_t> members(k);
        std::iota(members.begin(), members.end(), std::size_t{0});
        sort_by_entropy(data, members);
        const auto score =
            detail::finish_score(data, members, detail::entropy_sum(data, members), joint.entropy(), joint.cell_count());
        ChanceRow row;
        row.cardinality = k;
        row.plugin = score.total_correlation;
        std::vector<std::uint64_t> sizes;
        for (std::size_t j : members) {
            sizes.push_back(data[j].domain_size);
        }
        row.corrected = score.total_correlation - relaxed_correction_sum(sizes, n);
        row.plugin_normalized = score.w_hat;
        row.corrected_normalized = score.w_corrected;
        rows.push_back(row);
    }
    return rows;
}

} // namespace relcorr
