#include <iostream>

#include "fsl/cli.hpp"

int main(int argc, char** argv) { return fsl::run_cli(argc, argv, std::cout, std::cerr); }
