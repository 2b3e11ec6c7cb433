#include <iostream>

#include "fedtest/cli.hpp"

int main(int argc, char** argv) { return fedtest::run_cli(argc, argv, std::cout, std::cerr); }
