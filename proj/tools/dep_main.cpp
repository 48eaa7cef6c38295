#include <iostream>
#include <string>
#include <vector>

#include "dep/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dep::cli::run(args, std::cout, std::cerr);
}
