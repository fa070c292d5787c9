// Writes the tic-tac-toe endgame table as CSV to stdout or to the given path.
#include <fstream>
#include <iostream>

#include "tictactoe.hpp"

int main(int argc, char** argv)
{
    const std::string text = tictactoe::csv();
    if (argc > 1) {
        std::ofstream out(argv[1]);
        if (!out) {
            std::cerr << "cannot write " << argv[1] << "\n";
            return 2;
        }
        out << text;
    } else {
        std::cout << text;
    }
    return 0;
}
