#include "relcorr/cli.hpp"

int main(int argc, char** argv)
{
    return relcorr::cli::run(argc, argv);
}
