#include "dosekit/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return dosekit::cli::run(argc, argv, std::cout, std::cerr);
}
