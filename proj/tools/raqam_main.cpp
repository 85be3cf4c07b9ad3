#include <iostream>
#include <string>
#include <vector>

#include "raqam/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return raqam::run_cli(args, std::cout, std::cerr);
}
