#include <iostream>

#include "censet/cli.hpp"

int main(int argc, char** argv) { return censet::cli::run(argc, argv, std::cout, std::cerr); }
