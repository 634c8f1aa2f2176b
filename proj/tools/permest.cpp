#include <iostream>
#include <string>
#include <vector>

#include "permest/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return permest::cli::dispatch(args, std::cout, std::cerr);
}
