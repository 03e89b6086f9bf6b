#include <iostream>

#include "picurve/cli.hpp"

int main(int argc, char** argv) {
    return picurve::run_cli(argc, argv, std::cout, std::cerr);
}
