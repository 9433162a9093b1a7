#include <iostream>

#include "qoecost/cli.hpp"

int main(int argc, char** argv) {
    return qoecost::cli::run(argc, argv, std::cout, std::cerr);
}
