#include "bitstar/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return bitstar::cli::run(argc, argv, std::cout, std::cerr); }
