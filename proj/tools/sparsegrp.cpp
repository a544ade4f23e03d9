#include "sparsegrp/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sparsegrp::run_cli(argc, argv, std::cout, std::cerr); }
