// SPDX-License-Identifier: Apache-2.0
#include "cli_app.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    return hurst::cli::run_cli(std::move(args), std::cout, std::cerr);
}
