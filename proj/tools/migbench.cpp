#include "migbench/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return migbench::run_cli(argc, argv, std::cout, std::cerr); }
