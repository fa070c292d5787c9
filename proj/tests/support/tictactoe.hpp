#pragma once

// Rebuilds the tic-tac-toe endgame table: every board reachable by legal play
// (x moves first) that ends in a win or a full board. Class is "positive" when
// x has three in a row. Yields the usual 958 rows, 626 of them positive.

#include <array>
#include <set>
#include <string>
#include <vector>

namespace tictactoe {

inline const std::vector<std::string>& column_names()
{
    static const std::vector<std::string> names = {
        "top-left-square",    "top-middle-square",    "top-right-square",
        "middle-left-square", "middle-middle-square", "middle-right-square",
        "bottom-left-square", "bottom-middle-square", "bottom-right-square",
        "Class"};
    return names;
}

using Board = std::array<char, 9>;

inline bool wins(const Board& b, char p)
{
    static constexpr int lines[8][3] = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {0, 3, 6},
                                        {1, 4, 7}, {2, 5, 8}, {0, 4, 8}, {2, 4, 6}};
    for (const auto& l : lines) {
        if (b[l[0]] == p && b[l[1]] == p && b[l[2]] == p) {
            return true;
        }
    }
    return false;
}

namespace detail {

inline void play(Board& b, char turn, int filled, std::set<Board>& out)
{
    if (wins(b, 'x') || wins(b, 'o') || filled == 9) {
        out.insert(b);
        return;
    }
    for (int i = 0; i < 9; ++i) {
        if (b[i] == 'b') {
            b[i] = turn;
            play(b, turn == 'x' ? 'o' : 'x', filled + 1, out);
            b[i] = 'b';
        }
    }
}

} // namespace detail

// Rows in lexicographic board order; each row has 10 string fields.
inline std::vector<std::vector<std::string>> rows()
{
    std::set<Board> boards;
    Board b;
    b.fill('b');
    detail::play(b, 'x', 0, boards);
    std::vector<std::vector<std::string>> out;
    out.reserve(boards.size());
    for (const auto& board : boards) {
        std::vector<std::string> row;
        for (char c : board) {
            row.emplace_back(1, c);
        }
        row.emplace_back(wins(board, 'x') ? "positive" : "negative");
        out.push_back(std::move(row));
    }
    return out;
}

inline std::string csv()
{
    std::string s;
    const auto& names = column_names();
    for (std::size_t j = 0; j < names.size(); ++j) {
        s += (j ? "," : "") + names[j];
    }
    s += "\n";
    for (const auto& row : rows()) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            s += (j ? "," : "") + row[j];
        }
        s += "\n";
    }
    return s;
}

} // namespace tictactoe
