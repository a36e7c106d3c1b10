#include <iostream>
#include <string>
#include <vector>

#include "bmo/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return bmo::run_cli(args, std::cout, std::cerr);
}
