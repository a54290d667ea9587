#include <iostream>
#include <string>
#include <vector>

#include "histreg/cli.hpp"

int main(int argc, char **argv) {
    const std::vector<std::string> args(argv, argv + argc);
    return histreg::cli::dispatch(args, std::cout, std::cerr);
}
