#include <iostream>

#include "arcshoot_cli/cli.hpp"

int main(int argc, char** argv) { return arcshoot::cli::run(argc, argv, std::cout, std::cerr); }
