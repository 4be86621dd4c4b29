#include <iostream>

#include "cli/cli.hpp"

int main(int argc, char** argv) { return rkranks::cli::run(argc, argv, std::cout, std::cerr); }
