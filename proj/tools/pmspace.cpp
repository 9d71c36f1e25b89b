#include "pmspace/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return pmspace::run_cli(argc, argv, std::cout, std::cerr); }
