#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "relcorr/data.hpp"
#include "relcorr/entropy.hpp"
#include "tictactoe.hpp"

using namespace relcorr;

TEST(ParseCsv, HeaderAndRows)
{
    const auto t = parse_csv("a,b\n1,2\n3,4", true);
    ASSERT_EQ(t.column_names, (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(t.row_count, 2u);
    EXPECT_EQ(t.columns[0], (std::vector<std::string>{"1", "3"}));
    EXPECT_EQ(t.columns[1], (std::vector<std::string>{"2", "4"}));
}

TEST(ParseCsv, SynthesizedNames)
{
    const auto t = parse_csv("1,2\n1,2", false);
    EXPECT_EQ(t.column_names, (std::vector<std::string>{"X1", "X2"}));
    EXPECT_EQ(t.row_count, 2u);
}

TEST(ParseCsv, RaggedRowNamesLine)
{
    try {
        parse_csv("a,b\n1", true);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(ParseCsv, EmptyInput)
{
    EXPECT_THROW(parse_csv("", true), DataError);
    EXPECT_THROW(parse_csv("\n\n", false), DataError);
}

TEST(ParseCsv, QuotedFieldsAndCrlf)
{
    const auto t = parse_csv("name,\"x,y\"\r\n\"a \"\"q\"\"\",\"1,5\"\r\nb,2\r\n", true);
    ASSERT_EQ(t.column_names, (std::vector<std::string>{"name", "x,y"}));
    EXPECT_EQ(t.columns[0][0], "a \"q\"");
    EXPECT_EQ(t.columns[1][0], "1,5");
    EXPECT_EQ(t.row_count, 2u);
}

TEST(ParseCsv, RowsWithEmptyFieldsAreRejectedAndCounted)
{
    const auto t = parse_csv("a,b\n1,2\n,3\n4,5\n", true);
    EXPECT_EQ(t.row_count, 2u);
    EXPECT_EQ(t.rejected_rows, 1u);
    EXPECT_EQ(t.columns[0], (std::vector<std::string>{"1", "4"}));
}

TEST(ParseCsv, DuplicateHeaderRejected)
{
    EXPECT_THROW(parse_csv("a,a\n1,2\n", true), DataError);
}

TEST(Discretize, ExactDivision)
{
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto codes = discretize_equal_frequency(v, 5);
    EXPECT_EQ(codes, (std::vector<Code>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4}));
}

TEST(Discretize, ConstantSequence)
{
    std::vector<double> v{7, 7, 7, 7};
    EXPECT_EQ(discretize_equal_frequency(v, 5), (std::vector<Code>{0, 0, 0, 0}));
}

TEST(Discretize, UnevenSplit)
{
    std::vector<double> v{1, 2, 3};
    const auto codes = discretize_equal_frequency(v, 2);
    std::map<Code, int> sizes;
    for (Code c : codes) {
        ++sizes[c];
    }
    ASSERT_EQ(sizes.size(), 2u);
    EXPECT_EQ(sizes[0], 2);
    EXPECT_EQ(sizes[1], 1);
}

TEST(Discretize, UnsortedInputKeepsRowOrder)
{
    std::vector<double> v{10, 1, 5, 3};
    EXPECT_EQ(discretize_equal_frequency(v, 2), (std::vector<Code>{1, 0, 1, 0}));
}

TEST(Discretize, Errors)
{
    std::vector<double> bad{1.0, std::numeric_limits<double>::quiet_NaN()};
    EXPECT_THROW(discretize_equal_frequency(bad, 2), DataError);
    std::vector<double> inf{1.0, std::numeric_limits<double>::infinity()};
    EXPECT_THROW(discretize_equal_frequency(inf, 2), DataError);
    EXPECT_THROW(discretize_equal_frequency(std::vector<double>{}, 2), UsageError);
    std::vector<double> ok{1.0, 2.0};
    EXPECT_THROW(discretize_equal_frequency(ok, 0), UsageError);
}

// Without ties, bin sizes differ by at most one and bins are ordered by value.
TEST(Discretize, BalancedBinsProperty)
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 60;
        const std::size_t bins = 1 + rng() % 8;
        std::vector<double> v(n);
        for (std::size_t i = 0; i < n; ++i) {
            v[i] = static_cast<double>(i) + 0.5;
        }
        std::shuffle(v.begin(), v.end(), rng);
        const auto codes = discretize_equal_frequency(v, bins);
        std::map<Code, std::size_t> sizes;
        for (Code c : codes) {
            ++sizes[c];
        }
        std::size_t lo = n, hi = 0;
        for (auto [c, s] : sizes) {
            lo = std::min(lo, s);
            hi = std::max(hi, s);
        }
        EXPECT_LE(hi - lo, 1u);
        EXPECT_EQ(sizes.size(), std::min(n, bins));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (v[i] < v[j]) {
                    EXPECT_LE(codes[i], codes[j]);
                }
            }
        }
    }
}

// Equal values always land in the same bin.
TEST(Discretize, TiesShareBin)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<double> v(n);
        for (auto& x : v) {
            x = static_cast<double>(rng() % 5);
        }
        const auto codes = discretize_equal_frequency(v, 1 + rng() % 6);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (v[i] == v[j]) {
                    EXPECT_EQ(codes[i], codes[j]);
                } else if (v[i] < v[j]) {
                    EXPECT_LE(codes[i], codes[j]);
                }
            }
        }
    }
}

TEST(Encode, FirstOccurrenceCodes)
{
    const auto t = parse_csv("c,d\na,x\nb,x\na,y\n", true);
    const auto data = encode(t);
    ASSERT_EQ(data.size(), 2u);
    EXPECT_EQ(data[0].codes, (std::vector<Code>{0, 1, 0}));
    EXPECT_EQ(data[0].domain_size, 2u);
    EXPECT_EQ(data[0].name, "c");
}

TEST(Encode, NumericTokensAreCategoriesByDefault)
{
    const auto t = parse_csv("v\n1.5\n2\n1.5\n3\n", true);
    const auto data = encode(t);
    EXPECT_EQ(data[0].domain_size, 3u);
    EXPECT_EQ(data[0].codes, (std::vector<Code>{0, 1, 0, 2}));
}

TEST(Encode, NumericDiscretization)
{
    const auto t = parse_csv("v,w\n1,a\n2,a\n3,b\n4,b\n5,c\n6,c\n", true);
    EncodeOptions opt;
    opt.numeric = NumericMode::automatic;
    opt.bins = 3;
    const auto data = encode(t, opt);
    EXPECT_EQ(data[0].domain_size, 3u);
    EXPECT_EQ(data[0].codes, (std::vector<Code>{0, 0, 1, 1, 2, 2}));
    EXPECT_EQ(data[1].domain_size, 3u);

    opt.numeric = NumericMode::listed;
    opt.numeric_columns = {"w"};
    EXPECT_THROW(encode(t, opt), DataError);
    opt.numeric_columns = {"nope"};
    EXPECT_THROW(encode(t, opt), DataError);
}

TEST(Encode, TooFewRows)
{
    EXPECT_THROW(encode(parse_csv("a\n1\n", true)), DataError);
}

TEST(Encode, TicTacToeShape)
{
    const auto data = encode(parse_csv(tictactoe::csv(), true));
    EXPECT_EQ(data.rows(), 958u);
    EXPECT_EQ(data.size(), 10u);
    const auto& cls = data[data.index_of("Class")];
    EXPECT_EQ(cls.domain_size, 2u);
    std::size_t positive = 0;
    for (Code c : cls.codes) {
        positive += c == cls.codes[0] ? 0 : 1;
    }
    // 626 positive, 332 negative; either label may be code 0.
    EXPECT_TRUE(positive == 332u || positive == 626u);
}

TEST(Encode, CheckedInTicTacToeMatchesGenerator)
{
    const std::filesystem::path path = std::filesystem::path(RELCORR_SOURCE_DIR) / "data" / "tic-tac-toe.csv";
    const auto from_file = encode(read_csv_file(path, true));
    const auto generated = encode(parse_csv(tictactoe::csv(), true));
    ASSERT_EQ(from_file.size(), generated.size());
    for (std::size_t j = 0; j < from_file.size(); ++j) {
        EXPECT_EQ(from_file[j].codes, generated[j].codes);
        EXPECT_EQ(from_file[j].name, generated[j].name);
    }
}

TEST(Dataset, AttributeInvariants)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + rng() % 100;
        const std::size_t d = 1 + rng() % 6;
        std::vector<std::vector<int>> cols(d, std::vector<int>(n));
        std::vector<std::string> names;
        for (std::size_t j = 0; j < d; ++j) {
            names.push_back("c" + std::to_string(j));
            const int dom = 1 + static_cast<int>(rng() % 6);
            for (auto& v : cols[j]) {
                v = 100 + static_cast<int>(rng() % dom) * 7;
            }
        }
        const auto data = EncodedDataset::from_columns(names, cols);
        for (std::size_t j = 0; j < d; ++j) {
            const auto& a = data[j];
            ASSERT_EQ(a.codes.size(), n);
            std::map<Code, std::uint64_t> counts;
            for (Code c : a.codes) {
                ASSERT_LT(c, a.domain_size);
                ++counts[c];
            }
            EXPECT_EQ(counts.size(), a.domain_size);
            std::set<int> raw(cols[j].begin(), cols[j].end());
            EXPECT_EQ(raw.size(), a.domain_size);
            // Independent entropy oracle: -sum p log2 p.
            double h = 0.0;
            for (auto [c, k] : counts) {
                const double p = static_cast<double>(k) / static_cast<double>(n);
                h -= p * std::log2(p);
            }
            EXPECT_NEAR(a.entropy, h, 1e-12);
            EXPECT_LE(a.entropy, std::log2(static_cast<double>(a.domain_size)) + 1e-12);
        }
    }
}

TEST(Dataset, ReencodingIsIdempotent)
{
    const auto data = encode(parse_csv(tictactoe::csv(), true));
    std::vector<std::string> names;
    std::vector<std::vector<Code>> cols;
    for (const auto& a : data.attributes()) {
        names.push_back(a.name);
        std::vector<Code> relabeled = a.codes;
        for (auto& c : relabeled) {
            c = a.domain_size - 1 - c;
        }
        cols.push_back(relabeled);
    }
    const auto again = EncodedDataset::from_columns(names, cols);
    for (std::size_t j = 0; j < data.size(); ++j) {
        EXPECT_EQ(again[j].domain_size, data[j].domain_size);
        EXPECT_EQ(again[j].entropy, data[j].entropy);
    }
}

TEST(Dataset, IndexOfListsCandidates)
{
    const auto data = encode(parse_csv("alpha,beta\n1,2\n3,4\n", true));
    EXPECT_EQ(data.index_of("beta"), 1u);
    try {
        (void)data.index_of("gamma");
        FAIL();
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("alpha"), std::string::npos);
        EXPECT_NE(msg.find("beta"), std::string::npos);
    }
}

TEST(Dataset, DropConstant)
{
    const auto data = encode(parse_csv("a,b,c\n1,k,x\n2,k,y\n3,k,x\n", true));
    const auto kept = drop_constant_attributes(data);
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_EQ(kept[0].name, "a");
    EXPECT_EQ(kept[1].name, "c");
}

TEST(Dataset, ReadMissingFile)
{
    EXPECT_THROW(read_csv_file("/nonexistent/definitely.csv", true), DataError);
}
