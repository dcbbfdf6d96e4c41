#include "csge/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return csge::cli_main(argc, argv, std::cout, std::cerr); }
