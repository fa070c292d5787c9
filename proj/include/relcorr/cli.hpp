#pragma once

// Command-line front end. Kept in a header so the test suite can drive every
// subcommand in-process through relcorr::cli::run.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relcorr/data.hpp"
#include "relcorr/error.hpp"
#include "relcorr/estimators.hpp"
#include "relcorr/search.hpp"
#include "relcorr/synth.hpp"

namespace relcorr::cli {

inline constexpr int schema_version = 1;

enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_data = 2, exit_incomplete = 3 };

struct DataFlags {
    std::string input;
    bool no_header = false;
    std::size_t bins = 5;
    std::string numeric_cols;
    bool drop_constant = false;
};

struct DiscoverFlags {
    DataFlags data;
    std::size_t k = 1;
    double alpha = 1.0;
    std::string algo = "bnb";
    std::optional<double> budget;
    std::string json;
    std::size_t repeats = 1;
};

struct ScoreFlags {
    DataFlags data;
    std::string set;
    std::string estimator = "relaxed";
    std::string json;
};

struct ChanceFlags {
    std::size_t d = 10;
    std::uint32_t domain = 4;
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::string json;
};

struct RegretFlags {
    std::string dims = "2,3,4";
    std::string bands = "[0.1,0.2);[0.2,0.3);[0.3,0.4);[0.4,0.5]";
    std::string n_grid = "10,20,30,40,50,60,70,80,90,100";
    std::size_t trials = 500;
    std::uint64_t seed = 1;
    std::string estimators = "plugin,exact,upper,relaxed";
    std::size_t max_attempts = 2000000;
    std::string out;
    std::string json;
};

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) {
        auto t = relcorr::detail::trim(item);
        if (!t.empty()) {
            out.emplace_back(t);
        }
    }
    return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const char* what)
{
    std::vector<T> out;
    for (const auto& item : split(s, ',')) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(item, &used);
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
            out.push_back(static_cast<T>(v));
        } catch (const std::exception&) {
            throw UsageError(std::string("invalid ") + what + " entry '" + item + "'");
        }
    }
    if (out.empty()) {
        throw UsageError(std::string("empty ") + what + " list");
    }
    return out;
}

// "[lo,hi)" or "[lo,hi]" separated by ';'.
inline std::vector<Band> parse_bands(const std::string& s)
{
    std::vector<Band> bands;
    for (const auto& item : split(s, ';')) {
        if (item.size() < 5 || item.front() != '[' || (item.back() != ')' && item.back() != ']')) {
            throw UsageError("invalid band '" + item + "' (expected [lo,hi) or [lo,hi])");
        }
        const auto comma = item.find(',');
        if (comma == std::string::npos) {
            throw UsageError("invalid band '" + item + "'");
        }
        Band b;
        try {
            b.lo = std::stod(item.substr(1, comma - 1));
            b.hi = std::stod(item.substr(comma + 1, item.size() - comma - 2));
        } catch (const std::exception&) {
            throw UsageError("invalid band '" + item + "'");
        }
        b.hi_inclusive = item.back() == ']';
        if (!(b.lo >= 0.0 && b.lo < b.hi && b.hi <= 1.0)) {
            throw UsageError("band '" + item + "' must satisfy 0 <= lo < hi <= 1");
        }
        bands.push_back(b);
    }
    if (bands.empty()) {
        throw UsageError("empty band list");
    }
    return bands;
}

inline void add_data_flags(CLI::App& app, DataFlags& f)
{
    app.add_option("--input", f.input, "CSV file")->required();
    app.add_flag("--no-header", f.no_header, "First line is data; columns are named X1..Xd");
    app.add_option("--bins", f.bins, "Equal-frequency bins for numeric columns")->check(CLI::PositiveNumber);
    app.add_option("--numeric-cols", f.numeric_cols, "Comma separated columns to discretize, or 'auto'");
    app.add_flag("--drop-constant", f.drop_constant, "Exclude attributes with a single observed value");
}

inline EncodedDataset load(const DataFlags& f, std::ostream& err)
{
    const RawTable table = read_csv_file(f.input, !f.no_header);
    if (table.rejected_rows > 0) {
        err << "warning: rejected " << table.rejected_rows << " row(s) with empty fields\n";
    }
    EncodeOptions opt;
    opt.bins = f.bins;
    if (f.numeric_cols == "auto") {
        opt.numeric = NumericMode::automatic;
    } else if (!f.numeric_cols.empty()) {
        opt.numeric = NumericMode::listed;
        opt.numeric_columns = split(f.numeric_cols, ',');
    }
    EncodedDataset data = encode(table, opt);
    if (f.drop_constant) {
        data = drop_constant_attributes(data);
    }
    return data;
}

inline nlohmann::json dataset_json(const EncodedDataset& data)
{
    nlohmann::json attrs = nlohmann::json::array();
    for (const auto& a : data.attributes()) {
        attrs.push_back({{"name", a.name}, {"domain_size", a.domain_size}, {"entropy", a.entropy}});
    }
    return {{"n", data.rows()}, {"d", data.size()}, {"attributes", attrs}};
}

inline nlohmann::json names_json(const EncodedDataset& data, const std::vector<std::size_t>& members)
{
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t j : members) {
        out.push_back(data[j].name);
    }
    return out;
}

inline std::string join_names(const EncodedDataset& data, const std::vector<std::size_t>& members)
{
    std::string s;
    for (std::size_t j : members) {
        if (!s.empty()) {
            s += ",";
        }
        s += data[j].name;
    }
    return s;
}

inline void write_json(const std::string& path, const nlohmann::json& doc)
{
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    out << doc.dump(2) << "\n";
}

inline nlohmann::json score_json(const SubsetScore& s)
{
    return {{"estimator", std::string(to_string(s.estimator))},
            {"entropy_sum", s.entropy_sum},
            {"entropy_max", s.entropy_max},
            {"joint_entropy", s.joint_entropy},
            {"joint_cells", s.joint_cells},
            {"total_correlation", s.total_correlation},
            {"normalizer", s.normalizer},
            {"w_hat", s.w_hat},
            {"t_relaxed", s.t_relaxed},
            {"w_corrected", s.w_corrected},
            {"correction", s.correction},
            {"value", s.value}};
}

} // namespace detail

inline int cmd_discover(const DiscoverFlags& f, const std::vector<std::string>& argv, std::ostream& out,
                        std::ostream& err)
{
    if (f.algo != "bnb" && f.algo != "greedy") {
        throw UsageError("--algo must be bnb or greedy");
    }
    if (!(f.alpha > 0.0 && f.alpha <= 1.0)) {
        throw UsageError("--alpha must lie in (0, 1]");
    }
    if (f.k < 1) {
        throw UsageError("--k must be >= 1");
    }
    if (f.repeats < 1) {
        throw UsageError("--repeats must be >= 1");
    }
    const EncodedDataset data = detail::load(f.data, err);

    SearchOptions opt;
    opt.alpha = f.alpha;
    if (f.budget) {
        opt.budget = std::chrono::duration<double>(*f.budget);
    }
    std::optional<SearchResult> result;
    double total_seconds = 0.0;
    for (std::size_t r = 0; r < f.repeats; ++r) {
        result = f.algo == "bnb" ? branch_and_bound(data, f.k, opt) : greedy(data, f.k);
        total_seconds += result->stats.wall_time.count();
    }
    const double seconds = total_seconds / static_cast<double>(f.repeats);
    const auto& stats = result->stats;

    out << "dataset: n=" << data.rows() << " d=" << data.size() << "  algo=" << f.algo << " k=" << f.k
        << " alpha=" << f.alpha << "\n";
    out << std::left << std::setw(5) << "rank" << std::setw(12) << "w_corr" << std::setw(12) << "w_hat" << std::setw(12)
        << "t_relaxed" << std::setw(7) << "size"
        << "members\n";
    out << std::fixed << std::setprecision(6);
    nlohmann::json results = nlohmann::json::array();
    for (std::size_t i = 0; i < result->top.size(); ++i) {
        const auto& e = result->top[i];
        out << std::setw(5) << i + 1 << std::setw(12) << e.score.w_corrected << std::setw(12) << e.score.w_hat
            << std::setw(12) << e.score.t_relaxed << std::setw(7) << e.members.size() << detail::join_names(data, e.members)
            << "\n";
        results.push_back({{"rank", i + 1},
                           {"members", detail::names_json(data, e.members)},
                           {"w_corrected", e.score.w_corrected},
                           {"w_hat", e.score.w_hat},
                           {"t_relaxed", e.score.t_relaxed},
                           {"depth", e.members.size()}});
    }
    out << std::defaultfloat << std::setprecision(6);
    out << "explored=" << stats.nodes_explored << " pruned=" << stats.nodes_pruned << " prune%=" << std::fixed
        << std::setprecision(2) << stats.prune_percent << std::defaultfloat << " max_depth=" << stats.max_depth_reached
        << " solution_depth=" << stats.solution_depth << " time=" << std::setprecision(4) << seconds << "s"
        << (result->complete ? "" : "  [INCOMPLETE: budget exhausted]") << "\n";

    if (!f.json.empty()) {
        nlohmann::json doc;
        doc["schema_version"] = schema_version;
        doc["command"] = argv;
        doc["config"] = {{"input", f.data.input},     {"no_header", f.data.no_header},
                         {"bins", f.data.bins},       {"numeric_cols", f.data.numeric_cols},
                         {"drop_constant", f.data.drop_constant},
                         {"k", f.k},                  {"alpha", f.alpha},
                         {"algo", f.algo},            {"budget_seconds", f.budget ? nlohmann::json(*f.budget) : nlohmann::json()},
                         {"repeats", f.repeats}};
        doc["dataset"] = detail::dataset_json(data);
        doc["results"] = results;
        doc["stats"] = {{"nodes_explored", stats.nodes_explored}, {"nodes_pruned", stats.nodes_pruned},
                        {"prune_percent", stats.prune_percent},   {"max_depth_reached", stats.max_depth_reached},
                        {"solution_depth", stats.solution_depth}, {"complete", result->complete}};
        doc["timing"] = {{"wall_seconds_mean", seconds}, {"repeats", f.repeats}};
        detail::write_json(f.json, doc);
    }
    return result->complete ? exit_ok : exit_incomplete;
}

inline int cmd_score(const ScoreFlags& f, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err)
{
    const Estimator estimator = parse_estimator(f.estimator);
    const EncodedDataset data = detail::load(f.data, err);
    std::vector<std::size_t> members;
    for (const auto& name : detail::split(f.set, ',')) {
        members.push_back(data.index_of(name));
    }
    if (members.size() < 2) {
        throw UsageError("--set needs at least two attributes");
    }
    if ((estimator == Estimator::exact || estimator == Estimator::upper) && members.size() > oracle_max_members) {
        throw UsageError("estimator '" + f.estimator + "' is limited to " + std::to_string(oracle_max_members) +
                         " attributes");
    }
    const SubsetScore s = score_subset(data, members, estimator);
    out << "members: " << detail::join_names(data, s.members) << "\n" << std::setprecision(10);
    out << "estimator: " << to_string(s.estimator) << "\n"
        << "entropy_sum: " << s.entropy_sum << "\n"
        << "entropy_max: " << s.entropy_max << "\n"
        << "joint_entropy: " << s.joint_entropy << "\n"
        << "joint_cells: " << s.joint_cells << "\n"
        << "total_correlation: " << s.total_correlation << "\n"
        << "normalizer: " << s.normalizer << "\n"
        << "w_hat: " << s.w_hat << "\n"
        << "t_relaxed: " << s.t_relaxed << "\n"
        << "w_corrected: " << s.w_corrected << "\n"
        << "correction: " << s.correction << "\n"
        << "value: " << s.value << "\n";
    if (!f.json.empty()) {
        nlohmann::json doc;
        doc["schema_version"] = schema_version;
        doc["command"] = argv;
        doc["dataset"] = detail::dataset_json(data);
        doc["members"] = detail::names_json(data, s.members);
        doc["score"] = detail::score_json(s);
        detail::write_json(f.json, doc);
    }
    return exit_ok;
}

inline int cmd_chance(const ChanceFlags& f, const std::vector<std::string>& argv, std::ostream& out)
{
    const auto start = std::chrono::steady_clock::now();
    const auto rows = chance_demo(f.d, f.domain, f.n, f.seed);
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    out << "cardinality\tplugin_bits\tcorrected_bits\tplugin_w\tcorrected_w\n" << std::setprecision(10);
    nlohmann::json jrows = nlohmann::json::array();
    for (const auto& r : rows) {
        out << r.cardinality << "\t" << r.plugin << "\t" << r.corrected << "\t" << r.plugin_normalized << "\t"
            << r.corrected_normalized << "\n";
        jrows.push_back({{"cardinality", r.cardinality},
                         {"plugin_bits", r.plugin},
                         {"corrected_bits", r.corrected},
                         {"plugin_w", r.plugin_normalized},
                         {"corrected_w", r.corrected_normalized}});
    }
    if (!f.json.empty()) {
        nlohmann::json doc;
        doc["schema_version"] = schema_version;
        doc["command"] = argv;
        doc["config"] = {{"d", f.d}, {"domain", f.domain}, {"n", f.n}, {"seed", f.seed}};
        doc["rows"] = jrows;
        doc["timing"] = {{"wall_seconds", elapsed.count()}};
        detail::write_json(f.json, doc);
    }
    return exit_ok;
}

inline int cmd_regret(const RegretFlags& f, const std::vector<std::string>& argv, std::ostream& out, std::ostream& err)
{
    const auto start = std::chrono::steady_clock::now();
    const auto dims = detail::parse_list<std::size_t>(f.dims, "--dims");
    const auto bands = detail::parse_bands(f.bands);
    const auto n_grid = detail::parse_list<std::size_t>(f.n_grid, "--n-grid");
    const auto estimators = detail::split(f.estimators, ',');
    if (estimators.empty()) {
        throw UsageError("--estimators is empty");
    }
    for (const auto& e : estimators) {
        (void)parse_regret_scorer(e);
    }
    if (f.trials < 1) {
        throw UsageError("--trials must be >= 1");
    }

    // pooled[estimator][n index] = regrets over all cells and trials
    std::map<std::string, std::vector<std::vector<double>>> pooled;
    for (const auto& e : estimators) {
        pooled[e].assign(n_grid.size(), {});
    }
    nlohmann::json cells = nlohmann::json::array();
    std::ostringstream cell_tsv;
    cell_tsv << "estimator\td\tband\tn\tmean_regret\tstderr\n" << std::setprecision(10);

    for (std::size_t di = 0; di < dims.size(); ++di) {
        for (std::size_t bi = 0; bi < bands.size(); ++bi) {
            const std::size_t d = dims[di];
            const Band& band = bands[bi];
            std::seed_seq seq{static_cast<std::uint32_t>(f.seed), static_cast<std::uint32_t>(f.seed >> 32),
                              static_cast<std::uint32_t>(d), static_cast<std::uint32_t>(bi)};
            std::uint32_t words[2];
            seq.generate(words, words + 2);
            const std::uint64_t cell_seed = (std::uint64_t{words[0]} << 32) | words[1];

            nlohmann::json cell = {{"d", d}, {"band", band.label()}};
            JointTable joint;
            try {
                joint = sample_joint_in_band(d, band, cell_seed, f.max_attempts);
            } catch (const SamplingError& e) {
                err << "warning: skipping d=" << d << " band " << band.label() << ": " << e.what() << "\n";
                cell["skipped"] = true;
                cells.push_back(cell);
                continue;
            }
            const auto spec = make_synthetic_spec(joint);
            std::vector<std::size_t> all(d);
            for (std::size_t v = 0; v < d; ++v) {
                all[v] = v;
            }
            cell["skipped"] = false;
            cell["distribution_w"] = population_w(joint, all);
            const auto curves = run_regret(spec, estimators, n_grid, f.trials, cell_seed);
            nlohmann::json jcurves;
            for (const auto& e : estimators) {
                const auto& c = curves.at(std::string(to_string(parse_regret_scorer(e))));
                jcurves[e] = {{"n", c.sample_sizes}, {"mean_regret", c.mean_regret}, {"stderr", c.stderr_regret}};
                for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
                    auto& p = pooled[e][ni];
                    p.insert(p.end(), c.regrets[ni].begin(), c.regrets[ni].end());
                    cell_tsv << e << "\t" << d << "\t" << band.label() << "\t" << n_grid[ni] << "\t" << c.mean_regret[ni]
                             << "\t" << c.stderr_regret[ni] << "\n";
                }
            }
            cell["curves"] = jcurves;
            cells.push_back(cell);
        }
    }

    out << "estimator\tn\tmean_regret\tstderr\n" << std::setprecision(10);
    nlohmann::json jpooled;
    for (const auto& e : estimators) {
        std::ostringstream tsv;
        tsv << "estimator\tn\tmean_regret\tstderr\n" << std::setprecision(10);
        std::vector<double> means;
        std::vector<double> errs;
        for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
            const auto& p = pooled[e][ni];
            // every cell skipped: no estimate rather than a fake zero
            const double nan = std::numeric_limits<double>::quiet_NaN();
            means.push_back(p.empty() ? nan : mean_of(p));
            errs.push_back(p.empty() ? nan : stderr_of(p));
            tsv << e << "\t" << n_grid[ni] << "\t" << means.back() << "\t" << errs.back() << "\n";
        }
        out << tsv.str().substr(tsv.str().find('\n') + 1);
        jpooled[e] = {{"n", n_grid}, {"mean_regret", means}, {"stderr", errs}};
        if (!f.out.empty()) {
            std::filesystem::create_directories(f.out);
            std::ofstream file(std::filesystem::path(f.out) / ("regret_" + e + ".tsv"));
            file << tsv.str();
        }
    }
    if (!f.out.empty()) {
        std::ofstream file(std::filesystem::path(f.out) / "regret_cells.tsv");
        file << cell_tsv.str();
    }
    if (!f.json.empty()) {
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        nlohmann::json doc;
        doc["schema_version"] = schema_version;
        doc["command"] = argv;
        doc["config"] = {{"dims", dims},   {"bands", f.bands},         {"n_grid", n_grid},
                         {"trials", f.trials}, {"seed", f.seed},       {"estimators", estimators},
                         {"max_attempts", f.max_attempts}};
        doc["cells"] = cells;
        doc["pooled"] = jpooled;
        doc["timing"] = {{"wall_seconds", elapsed.count()}};
        detail::write_json(f.json, doc);
    }
    return exit_ok;
}

// Parses argv and dispatches; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    std::vector<std::string> args(argv, argv + argc);
    CLI::App app{"Discover reliably correlated attribute sets in categorical data", "relcorr"};
    app.require_subcommand(1);

    DiscoverFlags discover;
    auto* sc_discover = app.add_subcommand("discover", "Top-k correlated subsets by branch-and-bound or greedy search");
    detail::add_data_flags(*sc_discover, discover.data);
    sc_discover->add_option("--k", discover.k, "Number of subsets to report")->check(CLI::PositiveNumber);
    sc_discover->add_option("--alpha", discover.alpha, "Approximation factor in (0,1]");
    sc_discover->add_option("--algo", discover.algo, "bnb or greedy");
    sc_discover->add_option("--budget", discover.budget, "Time budget in seconds (bnb)");
    sc_discover->add_option("--json", discover.json, "Write a JSON report here");
    sc_discover->add_option("--repeats", discover.repeats, "Average wall time over this many runs");

    ScoreFlags score;
    auto* sc_score = app.add_subcommand("score", "Print all score components of one attribute set");
    detail::add_data_flags(*sc_score, score.data);
    sc_score->add_option("--set", score.set, "Comma separated attribute names")->required();
    sc_score->add_option("--estimator", score.estimator, "plugin|exact|upper|relaxed");
    sc_score->add_option("--json", score.json, "Write a JSON report here");

    ChanceFlags chance;
    auto* sc_chance = app.add_subcommand("chance", "Correlation-by-chance demonstration on independent data");
    sc_chance->add_option("--d", chance.d, "Number of variables");
    sc_chance->add_option("--domain", chance.domain, "Domain size of every variable");
    sc_chance->add_option("--n", chance.n, "Sample size");
    sc_chance->add_option("--seed", chance.seed, "Random seed");
    sc_chance->add_option("--json", chance.json, "Write a JSON report here");

    RegretFlags regret;
    auto* sc_regret = app.add_subcommand("regret", "Estimator regret on sampled synthetic distributions");
    sc_regret->add_option("--dims", regret.dims, "Comma separated numbers of dependent variables");
    sc_regret->add_option("--bands", regret.bands, "Target w bands, e.g. \"[0.1,0.3);[0.3,0.5]\"");
    sc_regret->add_option("--n-grid", regret.n_grid, "Comma separated sample sizes");
    sc_regret->add_option("--trials", regret.trials, "Datasets per sample size");
    sc_regret->add_option("--seed", regret.seed, "Random seed");
    sc_regret->add_option("--estimators", regret.estimators, "Subset of plugin,exact,upper,relaxed,population");
    sc_regret->add_option("--max-attempts", regret.max_attempts, "Rejection-sampling attempts per distribution");
    sc_regret->add_option("--out", regret.out, "Directory for per-estimator TSV files");
    sc_regret->add_option("--json", regret.json, "Write a JSON summary here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n" << "run with --help for usage\n";
        return exit_usage;
    }

    try {
        if (*sc_discover) {
            return cmd_discover(discover, args, out, err);
        }
        if (*sc_score) {
            return cmd_score(score, args, out, err);
        }
        if (*sc_chance) {
            return cmd_chance(chance, args, out);
        }
        if (*sc_regret) {
            return cmd_regret(regret, args, out, err);
        }
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return exit_data;
    }
    return exit_usage;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

} // namespace relcorr::cli
