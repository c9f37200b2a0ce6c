#include <iostream>

#include "commands.hpp"

int main(int argc, char** argv) {
    return l1af::cli::run(argc, argv, std::cout, std::cerr);
}
