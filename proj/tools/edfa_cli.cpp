#include <iostream>

#include "edfa/cli.hpp"

int main(int argc, char** argv) { return edfa::cli::run(argc, argv, std::cout, std::cerr); }
