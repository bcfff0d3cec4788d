#include "hypergrad/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return hypergrad::cli_main(argc, argv, std::cout, std::cerr); }
