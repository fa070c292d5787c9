#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "relcorr/entropy.hpp"
#include "relcorr/error.hpp"

namespace relcorr {

using Code = std::uint32_t;

// Column-major table of raw text tokens as read from a CSV file.
struct RawTable {
    std::vector<std::string> column_names;
    std::vector<std::vector<std::string>> columns;
    std::size_t row_count = 0;
    // Data rows dropped because at least one field was empty.
    std::size_t rejected_rows = 0;
};

namespace detail {

inline std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

struct CsvRecord {
    std::vector<std::string> fields;
    std::size_t line = 0;
};

// Splits text into records. Quoted fields may contain commas, doubled quotes
// and newlines; unquoted fields are trimmed of surrounding blanks. Lines that
// are entirely blank are skipped.
inline std::vector<CsvRecord> split_csv(std::string_view text)
{
    if (text.starts_with("\xEF\xBB\xBF")) {
        text.remove_prefix(3);
    }
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    bool quoted = false;
    bool was_quoted = false;
    bool any_content = false;
    std::size_t line = 1;
    current.line = 1;

    auto finish_field = [&] {
        current.fields.push_back(was_quoted ? field : std::string(trim(field)));
        field.clear();
        was_quoted = false;
    };
    auto finish_record = [&] {
        finish_field();
        if (any_content) {
            records.push_back(std::move(current));
        }
        current = CsvRecord{};
        any_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char ch = text[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (ch == '\n') {
                    ++line;
                }
                field.push_back(ch);
            }
            continue;
        }
        switch (ch) {
        case '"':
            quoted = true;
            was_quoted = true;
            any_content = true;
            field.clear();
            break;
        case ',':
            any_content = true;
            finish_field();
            break;
        case '\r':
            break;
        case '\n':
            finish_record();
            ++line;
            current.line = line;
            break;
        default:
            if (ch != ' ' && ch != '\t') {
                any_content = true;
            }
            if (!was_quoted) {
                field.push_back(ch);
            }
            break;
        }
    }
    if (quoted) {
        throw DataError("line " + std::to_string(current.line) + ": unterminated quoted field");
    }
    finish_record();
    return records;
}

inline bool parse_real(std::string_view token, double& out)
{
    token = trim(token);
    if (token.empty()) {
        return false;
    }
    if (token.front() == '+') {
        token.remove_prefix(1);
    }
    const auto* end = token.data() + token.size();
    const auto res = std::from_chars(token.data(), end, out);
    return res.ec == std::errc() && res.ptr == end;
}

} // namespace detail

// Parses comma separated text. Without a header the columns are named
// X1..Xd. Ragged rows raise DataError naming the offending line.
inline RawTable parse_csv(std::string_view text, bool has_header)
{
    auto records = detail::split_csv(text);
    if (records.empty()) {
        throw DataError("empty input");
    }

    RawTable table;
    const std::size_t width = records.front().fields.size();
    std::size_t first_data = 0;
    if (has_header) {
        table.column_names = std::move(records.front().fields);
        first_data = 1;
        std::unordered_set<std::string> seen;
        for (const auto& name : table.column_names) {
            if (!seen.insert(name).second) {
                throw DataError("duplicate column name '" + name + "'");
            }
        }
    } else {
        for (std::size_t j = 0; j < width; ++j) {
            table.column_names.push_back("X" + std::to_string(j + 1));
        }
    }

    table.columns.assign(width, {});
    for (std::size_t r = first_data; r < records.size(); ++r) {
        auto& rec = records[r];
        if (rec.fields.size() != width) {
            throw DataError("line " + std::to_string(rec.line) + ": expected " + std::to_string(width) +
                            " fields, found " + std::to_string(rec.fields.size()));
        }
        const bool has_empty =
            std::any_of(rec.fields.begin(), rec.fields.end(), [](const std::string& f) { return f.empty(); });
        if (has_empty) {
            ++table.rejected_rows;
            continue;
        }
        for (std::size_t j = 0; j < width; ++j) {
            table.columns[j].push_back(std::move(rec.fields[j]));
        }
        ++table.row_count;
    }
    return table;
}

inline RawTable read_csv_file(const std::filesystem::path& path, bool has_header)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), has_header);
}

// Equal-frequency binning by rank. Values are stably sorted; the element at
// rank r falls into bin floor(r * bins / n), so bin sizes differ by at most
// one. Equal values are then merged into the bin of their lowest rank, and
// the occupied bins are renumbered 0..k-1 in increasing value order.
inline std::vector<Code> discretize_equal_frequency(std::span<const double> values, std::size_t bins)
{
    if (values.empty()) {
        throw UsageError("discretize: empty value sequence");
    }
    if (bins < 1) {
        throw UsageError("discretize: bins must be >= 1");
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw DataError("discretize: non-finite value");
        }
    }
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<Code> bin(n);
    std::size_t group_bin = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t rank_bin = r * bins / n;
        if (r == 0 || values[order[r]] != values[order[r - 1]]) {
            group_bin = rank_bin;
        }
        bin[order[r]] = static_cast<Code>(group_bin);
    }

    std::vector<Code> remap(bins, 0);
    std::vector<bool> used(bins, false);
    for (Code b : bin) {
        used[b] = true;
    }
    Code next = 0;
    for (std::size_t b = 0; b < bins; ++b) {
        if (used[b]) {
            remap[b] = next++;
        }
    }
    for (auto& b : bin) {
        b = remap[b];
    }
    return bin;
}

struct Attribute {
    std::string name;
    std::vector<Code> codes;
    std::uint32_t domain_size = 0;
    double entropy = 0.0;
};

namespace detail {

inline Attribute make_attribute(std::string name, std::vector<Code> codes, std::uint32_t domain_size)
{
    std::vector<std::uint64_t> counts(domain_size, 0);
    for (Code c : codes) {
        ++counts[c];
    }
    Attribute attr;
    attr.name = std::move(name);
    attr.domain_size = domain_size;
    attr.entropy = entropy(counts, codes.size());
    attr.codes = std::move(codes);
    return attr;
}

// Relabels arbitrary values to dense codes in first-occurrence order.
template <typename T>
std::pair<std::vector<Code>, std::uint32_t> compact_codes(std::span<const T> values)
{
    std::unordered_map<T, Code> index;
    std::vector<Code> codes;
    codes.reserve(values.size());
    for (const auto& v : values) {
        auto [it, inserted] = index.try_emplace(v, static_cast<Code>(index.size()));
        codes.push_back(it->second);
    }
    return {std::move(codes), static_cast<std::uint32_t>(index.size())};
}

} // namespace detail

// n rows of d categorical attributes with dense codes and observed domains.
// Immutable after construction.
class EncodedDataset {
public:
    EncodedDataset() = default;

    explicit EncodedDataset(std::vector<Attribute> attributes) : attributes_(std::move(attributes))
    {
        if (attributes_.empty()) {
            throw DataError("dataset has no attributes");
        }
        rows_ = attributes_.front().codes.size();
        if (rows_ < 2) {
            throw DataError("dataset needs at least 2 rows (correction terms divide by n-1)");
        }
        for (const auto& a : attributes_) {
            if (a.codes.size() != rows_) {
                throw DataError("attribute '" + a.name + "' has inconsistent length");
            }
        }
    }

    // Builds a dataset from raw integer columns, relabelling each column to
    // dense first-occurrence codes.
    template <typename T>
    static EncodedDataset from_columns(const std::vector<std::string>& names, const std::vector<std::vector<T>>& columns)
    {
        if (names.size() != columns.size()) {
            throw UsageError("from_columns: names and columns differ in count");
        }
        std::vector<Attribute> attrs;
        attrs.reserve(columns.size());
        for (std::size_t j = 0; j < columns.size(); ++j) {
            auto [codes, dom] = detail::compact_codes(std::span<const T>(columns[j]));
            attrs.push_back(detail::make_attribute(names[j], std::move(codes), dom));
        }
        return EncodedDataset(std::move(attrs));
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t size() const noexcept { return attributes_.size(); }
    [[nodiscard]] const Attribute& operator[](std::size_t j) const { return attributes_[j]; }
    [[nodiscard]] const std::vector<Attribute>& attributes() const noexcept { return attributes_; }

    // Index of the attribute called `name`; DataError lists candidates.
    [[nodiscard]] std::size_t index_of(std::string_view name) const
    {
        for (std::size_t j = 0; j < attributes_.size(); ++j) {
            if (attributes_[j].name == name) {
                return j;
            }
        }
        std::string msg = "unknown attribute '" + std::string(name) + "'; candidates:";
        for (const auto& a : attributes_) {
            msg += " " + a.name;
        }
        throw DataError(msg);
    }

private:
    std::vector<Attribute> attributes_;
    std::size_t rows_ = 0;
};

enum class NumericMode { none, automatic, listed };

struct EncodeOptions {
    NumericMode numeric = NumericMode::none;
    // Column names to discretize when numeric == listed.
    std::vector<std::string> numeric_columns;
    std::size_t bins = 5;
};

// Maps every column to dense codes in first-occurrence order. Columns picked
// by `options.numeric` are discretized into equal-frequency bins first.
inline EncodedDataset encode(const RawTable& table, const EncodeOptions& options = {})
{
    if (table.row_count < 2) {
        throw DataError("need at least 2 data rows (correction terms divide by n-1), found " +
                        std::to_string(table.row_count));
    }
    if (options.numeric == NumericMode::listed) {
        for (const auto& name : options.numeric_columns) {
            if (std::find(table.column_names.begin(), table.column_names.end(), name) == table.column_names.end()) {
                std::string msg = "unknown numeric column '" + name + "'; candidates:";
                for (const auto& c : table.column_names) {
                    msg += " " + c;
                }
                throw DataError(msg);
            }
        }
    }

    std::vector<Attribute> attrs;
    attrs.reserve(table.columns.size());
    for (std::size_t j = 0; j < table.columns.size(); ++j) {
        const auto& col = table.columns[j];
        const auto& name = table.column_names[j];

        bool discretize = false;
        std::vector<double> numbers;
        if (options.numeric != NumericMode::none) {
            const bool listed = options.numeric == NumericMode::listed &&
                                std::find(options.numeric_columns.begin(), options.numeric_columns.end(), name) !=
                                    options.numeric_columns.end();
            if (options.numeric == NumericMode::automatic || listed) {
                numbers.reserve(col.size());
                bool all_numeric = true;
                for (const auto& token : col) {
                    double v = 0.0;
                    if (!detail::parse_real(token, v)) {
                        all_numeric = false;
                        break;
                    }
                    numbers.push_back(v);
                }
                if (listed && !all_numeric) {
                    throw DataError("column '" + name + "' was listed as numeric but holds non-numeric values");
                }
                discretize = all_numeric;
            }
        }

        if (discretize) {
            auto bins = discretize_equal_frequency(numbers, options.bins);
            const Code dom = bins.empty() ? 0 : *std::max_element(bins.begin(), bins.end()) + 1;
            attrs.push_back(detail::make_attribute(name, std::move(bins), dom));
        } else {
            auto [codes, dom] = detail::compact_codes(std::span<const std::string>(col));
            attrs.push_back(detail::make_attribute(name, std::move(codes), dom));
        }
    }
    return EncodedDataset(std::move(attrs));
}

// Copy of `data` without attributes of observed domain size 1.
inline EncodedDataset drop_constant_attributes(const EncodedDataset& data)
{
    std::vector<Attribute> kept;
    for (const auto& a : data.attributes()) {
        if (a.domain_size > 1) {
            kept.push_back(a);
        }
    }
    if (kept.empty()) {
        throw DataError("every attribute is constant");
    }
    return EncodedDataset(std::move(kept));
}

} // namespace relcorr
