#include <iostream>

#include "galam/cli.hpp"

int main(int argc, char** argv) { return galam::cli::parse_and_dispatch(argc, argv, std::cout, std::cerr); }
