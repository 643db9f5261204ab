#include <iostream>
#include <string>
#include <vector>

#include "drlab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return drlab::run_cli(args, std::cout, std::cerr);
}
